#include "sysmel/analyzer.hpp"
#include "sysmel/bytecode.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/hir.hpp"
#include "sysmel/mir.hpp"
#include "sysmel/runtime.hpp"

namespace sysmel {

namespace {

FunctionDefinitionObject* definitionOf(const ObjectValue& function, ClosureObject*& closure) {
    if (auto* c = function.as<ClosureObject>()) {
        closure = c;
        return c->definition;
    }
    if (auto* definition = function.as<FunctionDefinitionObject>())
        return definition;
    if (auto* entity = function.as<FunctionEntityObject>())
        return entity->definition;
    return nullptr;
}

} // namespace

ObjectValue Runtime::call(const ObjectValue& function, std::span<const ObjectValue> arguments) {
    if (auto* intrinsic = function.as<IntrinsicFunctionObject>()) {
        if (!intrinsic->variadic && arguments.size() != intrinsic->argumentTypes.size())
            throw EvaluationError("intrinsic '" + intrinsic->name->text + "' expects " +
                                  std::to_string(intrinsic->argumentTypes.size()) +
                                  " arguments, got " + std::to_string(arguments.size()));
        ActivationDepthGuard guard(*this);
        return intrinsic->handler(*this, arguments);
    }

    ClosureObject* closure = nullptr;
    FunctionDefinitionObject* definition = definitionOf(function, closure);
    if (!definition)
        throw EvaluationError("value is not callable: " + printString(function));
    if (arguments.size() != definition->arity()) {
        std::string name = definition->name ? definition->name->text : "<lambda>";
        throw EvaluationError("function '" + name + "' expects " +
                              std::to_string(definition->arity()) + " arguments, got " +
                              std::to_string(arguments.size()));
    }

    Analyzer analyzer(*this);
    switch (engine) {
    case ExecutionEngine::TreeWalk:
        return analyzer.callTreeWalk(definition, closure, arguments);
    case ExecutionEngine::Bytecode:
        return executeBytecode(*this, *compileToBytecode(*this, definition), closure, arguments);
    case ExecutionEngine::Hir:
        return interpretHir(*this, *optimizeHir(*this, definition), closure, arguments);
    case ExecutionEngine::MirPreAlloc: {
        MirFunction mir = lowerToMir(*this, *optimizeHir(*this, definition));
        fuseCompareBranch(mir);
        return emulateMir(*this, mir, closure, arguments);
    }
    case ExecutionEngine::MirPostLayout: {
        MirFunction mir = lowerToMir(*this, *optimizeHir(*this, definition));
        fuseCompareBranch(mir);
        MirFunction allocatedMir = allocateRegisters(mir);
        computeFrameLayout(allocatedMir);
        return emulateMir(*this, allocatedMir, closure, arguments);
    }
    }
    throw EvaluationError("selected execution engine is not available");
}

ObjectValue Runtime::dispatchMessage(const ObjectValue& receiver, SymbolObject* selector,
                                     std::span<const ObjectValue> arguments) {
    TypeObject* receiverType = typeOf(receiver);
    const MethodEntry* entry = receiverType ? lookupMethod(receiverType, selector) : nullptr;
    if (!entry && receiverType && receiverType->typeKind == TypeKind::ReferenceTo) {
        // References answer only store and address-of; anything else
        // goes to the referenced value, mirroring static analysis.
        if (auto* location = receiver.as<LocationObject>())
            if (location->location.valid())
                return dispatchMessage(location->location.load(), selector, arguments);
    }
    if (!entry) {
        std::string typeName =
            receiverType && receiverType->name ? receiverType->name->text : "value";
        throw EvaluationError(typeName + " does not understand '" + selector->text + "'");
    }
    std::vector<ObjectValue> withReceiver;
    withReceiver.reserve(arguments.size() + 1);
    withReceiver.push_back(receiver);
    withReceiver.insert(withReceiver.end(), arguments.begin(), arguments.end());
    return call(entry->target, withReceiver);
}

} // namespace sysmel
