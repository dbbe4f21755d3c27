#ifndef SYSMEL_ANALYZER_HPP
#define SYSMEL_ANALYZER_HPP

#include "sysmel/runtime.hpp"

#include <map>
#include <span>

namespace sysmel {

class Analyzer;
struct LexicalScope;

/// Where a name used inside a function body lives.
struct LocalBinding {
    enum class Kind { Argument, Local, Capture };
    Kind kind = Kind::Local;
    uint32_t index = 0;
    TypeObject* type = nullptr;
    /// Mutable bindings hold a reference (cell location); reads
    /// auto-load, `:=` stores.
    bool isMutableCell = false;
};

/// Per-function analysis state: the definition being analyzed and the
/// link to the enclosing function for capture resolution.
struct FunctionScope {
    FunctionScope* parentFunction = nullptr;
    LexicalScope* parentLexical = nullptr; // scope at the lambda site
    FunctionDefinitionObject* definition = nullptr;
    /// Expressions (in the enclosing function's coordinates) that
    /// produce each capture's value at closure-creation time.
    std::vector<AstNode*> captureSources;
};

/// One brace scope inside a function.
struct LexicalScope {
    LexicalScope* parent = nullptr;
    FunctionScope* function = nullptr;
    std::map<SymbolObject*, LocalBinding, SymbolTextLess> bindings;

    const LocalBinding* lookupHere(SymbolObject* name) const {
        auto it = bindings.find(name);
        return it == bindings.end() ? nullptr : &it->second;
    }
};

struct AnalysisContext {
    EnvironmentObject* environment = nullptr;
    TypeObject* expectedType = nullptr;
    FunctionDefinitionObject* currentFunction = nullptr;
    LexicalScope* scope = nullptr;
    FunctionScope* functionScope = nullptr;
    /// Top-level combined analyze-and-evaluate mode: definitions bind
    /// into the environment immediately and statements run eagerly.
    bool evaluating = false;
    /// Innermost class builder currently processing its definition
    /// block (gives `field`/`method` builders their target class).
    Object* builderContext = nullptr;

    AnalysisContext withExpected(TypeObject* type) const {
        AnalysisContext c = *this;
        c.expectedType = type;
        return c;
    }
};

/// Activation record for tree-walking evaluation of analyzed bodies.
struct EvalFrame {
    std::span<const ObjectValue> arguments;
    std::vector<ObjectValue> locals;
    ClosureObject* closure = nullptr;
};

/// The semantic-analysis engine: combined top-level analyze-and-
/// evaluate, pure analysis of function bodies, macro expansion,
/// two-phase application analysis with mandatory pure folding, and
/// message-send analysis delegated through receiver types.
class Analyzer {
public:
    explicit Analyzer(Runtime& runtime) : rt(runtime) {}

    Runtime& rt;

    /// Top level: processes statements in order; definitions take
    /// effect before later statements. Empty input yields void.
    ObjectValue analyzeAndEvaluate(AstNode* node, EnvironmentObject* environment);

    /// Pure analysis: returns a node with analyzedType set on itself
    /// and every descendant. Idempotent.
    AstNode* analyze(AstNode* node, AnalysisContext& ctx);

    /// Tree-walk evaluation of an analyzed node.
    ObjectValue evaluate(AstNode* node, EvalFrame& frame);

    /// Lazily analyzes a definition's body (idempotent).
    void ensureAnalyzed(FunctionDefinitionObject* definition);

    /// Tree-walk function activation (arity already checked).
    ObjectValue callTreeWalk(FunctionDefinitionObject* definition, ClosureObject* closure,
                             std::span<const ObjectValue> arguments);

    /// Expands a macro target (native macro or macro function) with
    /// unanalyzed argument nodes; enforces the expansion depth limit.
    AstNode* expandMacro(const ObjectValue& target, AstNode* receiver,
                         std::span<AstNode* const> arguments, AnalysisContext& ctx,
                         const SourcePosition& position);

    /// Evaluates an expression that must produce a type at analysis
    /// time (parameter/result type annotations).
    TypeObject* evaluateTypeExpression(AstNode* node, AnalysisContext& ctx);

    // Node construction helpers shared with the metabuilder module.
    template <typename T>
    T* makeNode(const SourcePosition& position) {
        T* node = rt.make<T>();
        node->type = rt.astNodeClassFor(node->nodeKind);
        node->position = position;
        return node;
    }
    LiteralNode* makeLiteral(const ObjectValue& value, TypeObject* type,
                             const SourcePosition& position);
    AstNode* makeIntrinsicApplication(const std::string& intrinsicName,
                                      std::vector<AstNode*> arguments, TypeObject* resultType,
                                      const SourcePosition& position);

    AstNode* analyzeMessageSendTo(AstNode* analyzedReceiver, SymbolObject* selector,
                                  std::span<AstNode* const> argumentNodes, AnalysisContext& ctx,
                                  const SourcePosition& position);

    /// Introduces a local binding: immediate environment binding in
    /// top-level evaluating mode, a frame slot inside functions.
    /// Shared by `let:with:` and the `let` builder.
    AstNode* analyzeLocalDefinition(AnalysisContext& ctx, SymbolObject* name,
                                    TypeObject* declaredType, AstNode* valueNode, bool isMutable,
                                    const SourcePosition& position);

    /// Analyzes an argument expression against an expected type,
    /// auto-loading references unless a reference is expected.
    AstNode* analyzeArgument(AstNode* node, TypeObject* expected, AnalysisContext& ctx);

    /// If the analyzed statement value is an unfinished builder
    /// literal, lets the builder complete at statement end.
    AstNode* finishBuilderStatement(AstNode* analyzed, AnalysisContext& ctx,
                                    const SourcePosition& position);

private:
    friend struct MetabuilderDispatch;

    AstNode* analyzeLiteral(LiteralNode* node, AnalysisContext& ctx);
    AstNode* analyzeIdentifier(IdentifierNode* node, AnalysisContext& ctx, bool keepReference);
    AstNode* analyzeMessageSend(MessageSendNode* node, AnalysisContext& ctx);
    AstNode* analyzeApplication(FunctionApplicationNode* node, AnalysisContext& ctx);
    AstNode* analyzeSequence(SequenceNode* node, AnalysisContext& ctx);
    AstNode* analyzeLambda(LambdaNode* node, AnalysisContext& ctx);
    AstNode* analyzeCascade(CascadeNode* node, AnalysisContext& ctx);
    AstNode* analyzeQuasiQuote(QuasiQuoteNode* node, AnalysisContext& ctx);
    AstNode* analyzeReceiver(AstNode* node, AnalysisContext& ctx);

    AstNode* autoLoadIfReference(AstNode* node, AnalysisContext& ctx);
    AstNode* resolveLocalName(FunctionScope* functionScope, LexicalScope* scope,
                              SymbolObject* name, const SourcePosition& position);
    void analyzeFunctionBody(FunctionDefinitionObject* definition, FunctionScope& functionScope);
    AstNode* coerceLiteral(LiteralNode* node, TypeObject* expected);
    AstNode* foldIfPure(FunctionApplicationNode* app, AnalysisContext& ctx);
    AstNode* analyzeExpandedApplication(FunctionApplicationNode* node, AnalysisContext& ctx);

    uint32_t allocateLocal(AnalysisContext& ctx);

    ObjectValue evaluateStatement(AstNode* node, AnalysisContext& ctx);
};

/// RAII guard for the macro expansion depth limit. Held across the
/// expansion and the analysis of its result, so self-reproducing
/// macros hit the limit instead of looping.
struct MacroDepthGuard {
    Runtime& runtime;
    MacroDepthGuard(Runtime& rt, const SourcePosition& position);
    ~MacroDepthGuard();
};

/// Registers the `let:with:`, `let:type:with:`, `if:then:`,
/// `if:then:else:`, `while:do:` native macros and the Boolean
/// short-circuit macros. Called once from Runtime setup.
void installNativeMacros(Runtime& rt);

} // namespace sysmel

#endif
