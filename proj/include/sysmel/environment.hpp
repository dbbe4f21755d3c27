#ifndef SYSMEL_ENVIRONMENT_HPP
#define SYSMEL_ENVIRONMENT_HPP

#include "sysmel/object.hpp"
#include "sysmel/type.hpp"

#include <map>
#include <optional>

namespace sysmel {

enum class BindingKind : uint8_t {
    Value,
    Macro,        // target is a macro function or native macro
    MacroFactory, // metabuilder factory: resolving spawns a builder
};

struct Binding {
    ObjectValue value;
    TypeObject* valueType = nullptr;
    bool isMutable = false;
    BindingKind kind = BindingKind::Value;
};

/// Compile-time / top-level value environment. Function-local scopes
/// live in the analyzer, not here.
class EnvironmentObject final : public Object {
public:
    EnvironmentObject* parent = nullptr;
    std::map<SymbolObject*, Binding, SymbolTextLess> bindings;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return bindings.size(); }

    const Binding* lookup(SymbolObject* name) const {
        for (const EnvironmentObject* env = this; env; env = env->parent) {
            auto it = env->bindings.find(name);
            if (it != env->bindings.end())
                return &it->second;
        }
        return nullptr;
    }

    Binding* lookupLocal(SymbolObject* name) {
        auto it = bindings.find(name);
        return it == bindings.end() ? nullptr : &it->second;
    }

    void bind(SymbolObject* name, Binding binding) { bindings[name] = std::move(binding); }

    void bindValue(SymbolObject* name, ObjectValue value, TypeObject* type, bool mutable_ = false) {
        Binding b;
        b.value = value;
        b.valueType = type;
        b.isMutable = mutable_;
        bindings[name] = b;
    }
};

} // namespace sysmel

#endif
