#ifndef SYSMEL_RUNTIME_HPP
#define SYSMEL_RUNTIME_HPP

#include "sysmel/ast.hpp"
#include "sysmel/environment.hpp"
#include "sysmel/function.hpp"
#include "sysmel/object.hpp"
#include "sysmel/program_entity.hpp"
#include "sysmel/type.hpp"

#include <deque>
#include <iosfwd>
#include <set>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>

namespace sysmel {

/// Which mechanism executes function bodies. Macro expansion and
/// top-level script evaluation always tree-walk.
enum class ExecutionEngine {
    TreeWalk,
    Bytecode,
    Hir,
    MirPreAlloc,   // emulate middle IR before register allocation
    MirPostLayout, // emulate after allocation and frame layout
};

struct OptimizationConfig {
    bool constantPropagation = true;
    bool simplifyControlFlow = true;
    bool inlineCalls = true;
    int inlineThreshold = 24;
};

/// Owns every heap object, the interned symbols, the builtin types
/// and the global environment. One Runtime is one evaluation context.
class Runtime {
public:
    Runtime();
    ~Runtime();

    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    // --- allocation ---
    template <typename T, typename... Args>
    T* make(Args&&... args) {
        auto owned = std::make_unique<T>(std::forward<Args>(args)...);
        T* raw = owned.get();
        raw->identityHash = nextIdentityHash_++;
        arena_.push_back(std::move(owned));
        return raw;
    }

    SymbolObject* intern(const std::string& text);

    /// Allocates an instance of `type` with the given payload kind.
    /// Throws EvaluationError on payload-kind mismatch.
    ObjectValue makeObject(TypeObject* type, std::vector<uint8_t> bytes);
    ObjectValue makeObject(TypeObject* type, size_t slotCount);
    ObjectValue makeObject(TypeObject* type, std::vector<ObjectValue> slots);

    ObjectValue makeString(const std::string& text);
    ObjectValue makeInteger(const BigInt& value);
    ObjectValue makeFloat(double value, TypeObject* type);
    /// Boxes a host integer as a value of the given primitive type,
    /// wrapping to the type's width.
    ObjectValue makePrimitiveInteger(const BigInt& value, TypeObject* type);
    ObjectValue makeBoolean(bool value);
    LocationObject* makeCell(ObjectValue initial, TypeObject* refType);

    // --- value inspection ---
    TypeObject* typeOf(const ObjectValue& value);
    BigInt integerValueOf(const ObjectValue& value) const;
    /// Unboxes a primitive-integer-typed value to a host integer
    /// (sign- or zero-extended per the type).
    int64_t primitiveIntValue(const ObjectValue& value, TypeObject* type) const;
    double floatValue(const ObjectValue& value) const;
    bool booleanValue(const ObjectValue& value) const;
    std::string printString(const ObjectValue& value);

    // --- derived types ---
    TypeObject* makeReferenceType(TypeObject* base);
    TypeObject* makePointerType(TypeObject* base);

    // --- types & globals ---
    TypeObject* makeType(const std::string& name, TypeObject* supertype, TypeKind kind);
    EnvironmentObject* globalEnvironment() { return globalEnvironment_; }
    NamespaceObject* globalNamespace() { return globalNamespace_; }
    SymbolObject* symbol(const char* text) { return intern(text); }

    /// Runs a function value (definition, closure or intrinsic) with
    /// the configured engine. Checks arity.
    ObjectValue call(const ObjectValue& function, std::span<const ObjectValue> arguments);
    /// Runtime message dispatch on the receiver's dynamic type.
    ObjectValue dispatchMessage(const ObjectValue& receiver, SymbolObject* selector,
                                std::span<const ObjectValue> arguments);

    ExecutionEngine engine = ExecutionEngine::TreeWalk;
    OptimizationConfig optimization;
    std::ostream* output = nullptr; // defaults to std::cout

    std::ostream& out();

    // Depth guards.
    int activationDepth = 0;
    static constexpr int maxActivationDepth = 10000;
    int macroExpansionDepth = 0;
    static constexpr int maxMacroExpansionDepth = 256;

    // --- builtin types, filled during construction ---
    struct Builtins {
        TypeObject* object = nullptr;   // root class
        TypeObject* type = nullptr;     // class Type
        TypeObject* dynamic = nullptr;
        TypeObject* undefinedObject = nullptr; // type of nil
        TypeObject* voidType = nullptr;
        TypeObject* boolean = nullptr;
        TypeObject* booleanTrue = nullptr;
        TypeObject* booleanFalse = nullptr;
        TypeObject* integer = nullptr;  // LiteralInteger / boxed Integer
        TypeObject* character = nullptr;
        TypeObject* int8 = nullptr;
        TypeObject* int16 = nullptr;
        TypeObject* int32 = nullptr;
        TypeObject* int64 = nullptr;
        TypeObject* uint8 = nullptr;
        TypeObject* uint16 = nullptr;
        TypeObject* uint32 = nullptr;
        TypeObject* uint64 = nullptr;
        TypeObject* size = nullptr;
        TypeObject* float32 = nullptr;
        TypeObject* float64 = nullptr;
        TypeObject* string = nullptr;
        TypeObject* symbol = nullptr;
        TypeObject* array = nullptr;
        TypeObject* byteArray = nullptr;
        TypeObject* tuple = nullptr;
        TypeObject* dictionary = nullptr;
        TypeObject* cell = nullptr;
        TypeObject* functionDefinition = nullptr;
        TypeObject* closure = nullptr;
        TypeObject* intrinsicFunction = nullptr;
        TypeObject* environmentType = nullptr;
        TypeObject* namespaceType = nullptr;
        TypeObject* classEntity = nullptr;
        TypeObject* functionEntity = nullptr;
        TypeObject* metabuilder = nullptr; // root of builder classes
        // AST node class hierarchy.
        TypeObject* astNode = nullptr;
        std::unordered_map<int, TypeObject*> astNodeClasses; // by NodeKind
    } builtins;

    ObjectValue nilValue;
    ObjectValue trueValue;
    ObjectValue falseValue;
    ObjectValue voidValue;

    TypeObject* astNodeClassFor(NodeKind kind);
    bool isPrimitiveIntegerType(const TypeObject* t) const;
    bool isPrimitiveFloatType(const TypeObject* t) const;
    bool isNumericPrimitive(const TypeObject* t) const;

    /// Named intrinsic registry (stable names, used by image loading
    /// and the MIR backend's helper calls).
    IntrinsicFunctionObject* intrinsicNamed(const std::string& name);
    void registerIntrinsic(IntrinsicFunctionObject* fn);

    /// Builtin objects addressable by stable name, for image builtin
    /// records (types, singletons, intrinsics).
    ObjectValue builtinNamed(const std::string& name);
    const std::map<std::string, ObjectValue>& builtinRegistry() const { return builtinsByName_; }
    void registerBuiltin(const std::string& name, ObjectValue value);
    /// True for names present in every runtime right after
    /// construction; later registrations (user classes) are excluded.
    bool isBaselineBuiltin(const std::string& name) const {
        return baselineBuiltins_.count(name) != 0;
    }

private:
    friend class Analyzer;

    std::deque<std::unique_ptr<Object>> arena_;
    uint32_t nextIdentityHash_ = 1;
    std::unordered_map<std::string, SymbolObject*> symbols_;
    uint32_t nextSymbolId_ = 1;
    EnvironmentObject* globalEnvironment_ = nullptr;
    NamespaceObject* globalNamespace_ = nullptr;
    std::unordered_map<std::string, IntrinsicFunctionObject*> intrinsics_;
    std::map<std::string, ObjectValue> builtinsByName_;
    std::set<std::string> baselineBuiltins_;

    void setupBuiltins();
};

/// RAII guard for the activation depth limit.
struct ActivationDepthGuard {
    Runtime& runtime;
    explicit ActivationDepthGuard(Runtime& rt);
    ~ActivationDepthGuard();
};

} // namespace sysmel

#endif
