#ifndef SYSMEL_OBJECT_HPP
#define SYSMEL_OBJECT_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace sysmel {

using BigInt = boost::multiprecision::cpp_int;

class TypeObject;
class Runtime;

/// The three object kinds of the runtime object model.
enum class ObjectKind : uint8_t {
    ByteTuple,
    SlotTuple,
};

class ObjectValue;

/// Heap object header: a type, a stable identity hash, and a size.
class Object {
public:
    TypeObject* type = nullptr;
    uint32_t identityHash = 0;

    virtual ~Object() = default;
    virtual ObjectKind objectKind() const = 0;
    /// Size in bytes for byte tuples, in slots for slot tuples.
    virtual size_t payloadSize() const = 0;
};

/// Raw binary payload: strings, boxed primitives, byte arrays.
class ByteTupleObject final : public Object {
public:
    std::vector<uint8_t> bytes;

    ObjectKind objectKind() const override { return ObjectKind::ByteTuple; }
    size_t payloadSize() const override { return bytes.size(); }

    std::string asString() const { return std::string(bytes.begin(), bytes.end()); }
};

/// Object with value slots: arrays, tuples, class instances, cells.
class SlotTupleObject : public Object {
public:
    std::vector<ObjectValue> slots;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override;
};

/// Interned symbol. Equal text implies the identical object.
class SymbolObject final : public Object {
public:
    std::string text;
    uint32_t internedId = 0;

    ObjectKind objectKind() const override { return ObjectKind::ByteTuple; }
    size_t payloadSize() const override { return text.size(); }
};

/// Boxed arbitrary-precision integer, for magnitudes outside the
/// immediate small-integer range or escaping typed contexts.
class BigIntObject final : public Object {
public:
    BigInt value;

    ObjectKind objectKind() const override { return ObjectKind::ByteTuple; }
    size_t payloadSize() const override;
};

/// Universal runtime value: immediate small integer, immediate
/// character, or heap object pointer. Heap storage is owned by the
/// Runtime arena; reclamation is delegated to the host.
class ObjectValue {
public:
    enum class Kind : uint8_t { SmallInt, Char, Heap };

    static constexpr int64_t smallIntMax = (int64_t(1) << 60) - 1;
    static constexpr int64_t smallIntMin = -(int64_t(1) << 60);

    ObjectValue() : kind_(Kind::Heap), object_(nullptr) {}

    static ObjectValue smallInt(int64_t v) {
        ObjectValue r;
        r.kind_ = Kind::SmallInt;
        r.immediate_ = v;
        return r;
    }
    static ObjectValue character(char32_t c) {
        ObjectValue r;
        r.kind_ = Kind::Char;
        r.immediate_ = int64_t(c);
        return r;
    }
    static ObjectValue heap(Object* o) {
        ObjectValue r;
        r.kind_ = Kind::Heap;
        r.object_ = o;
        return r;
    }
    static bool fitsSmallInt(const BigInt& v) {
        return v >= smallIntMin && v <= smallIntMax;
    }

    Kind kind() const { return kind_; }
    bool isSmallInt() const { return kind_ == Kind::SmallInt; }
    bool isChar() const { return kind_ == Kind::Char; }
    bool isHeap() const { return kind_ == Kind::Heap && object_ != nullptr; }
    bool isNullHeap() const { return kind_ == Kind::Heap && object_ == nullptr; }

    int64_t smallIntValue() const { return immediate_; }
    char32_t charValue() const { return char32_t(immediate_); }
    Object* object() const { return kind_ == Kind::Heap ? object_ : nullptr; }

    template <typename T>
    T* as() const { return dynamic_cast<T*>(object()); }
    template <typename T>
    bool isA() const { return as<T>() != nullptr; }

    /// Identity comparison (same immediate payload or same object).
    bool operator==(const ObjectValue& other) const {
        if (kind_ != other.kind_)
            return false;
        return kind_ == Kind::Heap ? object_ == other.object_ : immediate_ == other.immediate_;
    }
    bool operator!=(const ObjectValue& other) const { return !(*this == other); }

private:
    Kind kind_;
    union {
        int64_t immediate_;
        Object* object_;
    };
};

/// A mutable storage location: a slot of some slot tuple. Cells for
/// local variables are one-slot tuples of the builtin Cell type, so
/// locals, object fields and captured variables share one shape.
struct Location {
    SlotTupleObject* object = nullptr;
    uint32_t slotIndex = 0;

    bool valid() const { return object != nullptr && slotIndex < object->slots.size(); }
    ObjectValue load() const { return object->slots[slotIndex]; }
    void store(const ObjectValue& v) const { object->slots[slotIndex] = v; }
};

/// Runtime value of reference and pointer types: a boxed location.
class LocationObject final : public Object {
public:
    Location location;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 1; }
};

} // namespace sysmel

#endif
