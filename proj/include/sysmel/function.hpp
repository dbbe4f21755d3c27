#ifndef SYSMEL_FUNCTION_HPP
#define SYSMEL_FUNCTION_HPP

#include "sysmel/object.hpp"

#include <memory>
#include <vector>

namespace sysmel {

class AstNode;
class SymbolObject;
class TypeObject;
class EnvironmentObject;
struct BytecodeFunction;
struct HirFunction;

struct FunctionParameter {
    SymbolObject* name = nullptr;
    TypeObject* type = nullptr;
    AstNode* typeNode = nullptr; // analyzed, optional
};

struct CaptureSlot {
    SymbolObject* name = nullptr;
    TypeObject* type = nullptr;
};

enum class FunctionFlags : uint32_t {
    None = 0,
    Macro = 1 << 0,
    Pure = 1 << 1,
    CompiledEagerly = 1 << 2,
};
inline FunctionFlags operator|(FunctionFlags a, FunctionFlags b) {
    return FunctionFlags(uint32_t(a) | uint32_t(b));
}
inline bool hasFlag(FunctionFlags set, FunctionFlags flag) {
    return (uint32_t(set) & uint32_t(flag)) != 0;
}

/// Analyzed arguments and body of one function, shared by every
/// closure created from the same lambda.
class FunctionDefinitionObject final : public Object {
public:
    SymbolObject* name = nullptr; // optional
    std::vector<FunctionParameter> parameters;
    TypeObject* resultType = nullptr;
    AstNode* resultTypeNode = nullptr;

    /// Unanalyzed body; analysis is lazy unless CompiledEagerly is set.
    AstNode* bodyNode = nullptr;
    AstNode* analyzedBody = nullptr;
    uint32_t localSlotCount = 0;
    /// Guards against compile-time evaluation re-entering a body whose
    /// analysis has not completed yet.
    bool analysisInProgress = false;

    FunctionFlags flags = FunctionFlags::None;
    std::vector<CaptureSlot> captures;

    /// Methods take the receiver as a hidden leading argument.
    TypeObject* selfType = nullptr;

    /// Environment the definition closes over (global chain).
    EnvironmentObject* definitionEnvironment = nullptr;

    // Engine caches.
    std::shared_ptr<BytecodeFunction> compiledBytecode;
    std::shared_ptr<HirFunction> hirCache;
    std::shared_ptr<HirFunction> hirOptimizedCache;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 0; }

    size_t arity() const { return parameters.size() + (selfType ? 1 : 0); }
    bool isMacro() const { return hasFlag(flags, FunctionFlags::Macro); }
    bool isPure() const { return hasFlag(flags, FunctionFlags::Pure); }
};

class ClosureObject final : public Object {
public:
    FunctionDefinitionObject* definition = nullptr;
    std::vector<ObjectValue> captureVector;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return captureVector.size() + 1; }
};

} // namespace sysmel

#endif
