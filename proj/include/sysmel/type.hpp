#ifndef SYSMEL_TYPE_HPP
#define SYSMEL_TYPE_HPP

#include "sysmel/object.hpp"
#include "sysmel/source_position.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>

namespace sysmel {

class SymbolObject;
class AstNode;
class Analyzer;
class EnvironmentObject;
struct AnalysisContext;

enum class TypeKind : uint8_t {
    PrimitiveInteger,
    PrimitiveFloat,
    SlotClass,
    Singleton,
    Dynamic,
    FunctionType,
    ReferenceTo,
    PointerTo,
    AstNodeClass,
    TypeOfTypes,
};

/// Semantic of an intrinsic function. Arithmetic/compare kinds lower
/// to single machine primitives in the MIR backend; the rest lower to
/// runtime helper calls.
enum class IntrinsicKind : uint8_t {
    Add, Sub, Mul, Div, Rem, FDiv,
    BitAnd, BitOr, BitXor, ShiftLeft, ShiftRight,
    CmpLt, CmpLe, CmpGt, CmpGe, CmpEq, CmpNe,
    Negate, Not,
    Convert,
    RefLoad, RefStore, RefAddress, PointerDeref,
    SlotRef,
    IdentityEq, IdentityNe,
    Native, // opaque handler (printLine, array helpers, node building, ...)
};

bool intrinsicKindIsMachinePrimitive(IntrinsicKind kind);

class IntrinsicFunctionObject final : public Object {
public:
    SymbolObject* name = nullptr;
    IntrinsicKind intrinsicKind = IntrinsicKind::Native;
    bool pure = false;
    /// Declared argument types; Dynamic entries accept anything.
    std::vector<TypeObject*> argumentTypes;
    TypeObject* resultType = nullptr;
    /// Variadic natives (e.g. node building) skip the arity check.
    bool variadic = false;
    std::function<ObjectValue(Runtime&, std::span<const ObjectValue>)> handler;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 0; }
};

struct MacroContext {
    Analyzer& analyzer;
    AnalysisContext& analysis;
    SourcePosition position;
};

using NativeMacroHandler =
    std::function<AstNode*(MacroContext&, AstNode* receiver, std::span<AstNode* const> arguments)>;

class NativeMacroObject final : public Object {
public:
    SymbolObject* name = nullptr;
    NativeMacroHandler handler;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 0; }
};

struct MethodEntry {
    SymbolObject* selector = nullptr;
    /// IntrinsicFunctionObject, NativeMacroObject, FunctionDefinitionObject
    /// or ClosureObject.
    ObjectValue target;
    bool isMacro = false;
    bool staticDispatch = true;
    bool pure = false;
};

struct SymbolTextLess {
    bool operator()(const SymbolObject* a, const SymbolObject* b) const;
};

struct FieldSlot {
    SymbolObject* name = nullptr;
    TypeObject* type = nullptr;
    uint32_t index = 0;
    bool isPublic = false;
};

/// First-class type. Types are themselves objects of the Type type.
class TypeObject : public Object {
public:
    SymbolObject* name = nullptr;
    TypeObject* supertype = nullptr;
    TypeKind typeKind = TypeKind::SlotClass;

    // PrimitiveInteger / PrimitiveFloat
    int bits = 0;
    bool isSigned = false;

    // SlotClass
    std::vector<FieldSlot> slotLayout;
    bool instancesAreBytes = false; // String, ByteArray, Integer

    // ReferenceTo / PointerTo
    TypeObject* baseType = nullptr;
    // Memoized derived types of this type.
    TypeObject* referenceTypeMemo = nullptr;
    TypeObject* pointerTypeMemo = nullptr;

    std::map<SymbolObject*, MethodEntry, SymbolTextLess> methodDictionary;
    std::map<SymbolObject*, MethodEntry, SymbolTextLess> macroDictionary;

    bool isFinal = false;
    bool isPublic = false;
    /// Set for metabuilder classes: message-send analysis is delegated
    /// onto the (literal) receiver instance instead of the dictionaries.
    bool delegatesSendsToInstance = false;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return slotLayout.size(); }

    bool isKindOf(const TypeObject* other) const {
        for (const TypeObject* t = this; t; t = t->supertype)
            if (t == other)
                return true;
        return false;
    }
};

/// Searches macro then method dictionaries along the supertype chain.
const MethodEntry* lookupSelector(TypeObject* type, SymbolObject* selector);
/// Method-dictionary-only lookup (runtime dispatch never sees macros).
const MethodEntry* lookupMethod(TypeObject* type, SymbolObject* selector);

} // namespace sysmel

#endif
