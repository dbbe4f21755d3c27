#include "sysmel/analyzer.hpp"

#include "sysmel/errors.hpp"
#include "sysmel/metabuilder.hpp"
#include "sysmel/primitive_encoding.hpp"

#include <cassert>

namespace sysmel {

AstNode* instantiateTemplate(Runtime& rt, const AstNode* templateNode,
                             std::span<const ObjectValue> holeValues); // quasiquote.cpp

MacroDepthGuard::MacroDepthGuard(Runtime& rt, const SourcePosition& position) : runtime(rt) {
    if (runtime.macroExpansionDepth >= Runtime::maxMacroExpansionDepth)
        throw SemanticError(SemanticError::Kind::MacroError, "macro expansion depth limit exceeded",
                            position);
    ++runtime.macroExpansionDepth;
}
MacroDepthGuard::~MacroDepthGuard() { --runtime.macroExpansionDepth; }

namespace {

using Kind = SemanticError::Kind;

std::string typeName(const TypeObject* type) {
    return type && type->name ? type->name->text : "?";
}

SymbolObject* selectorSymbolOf(const AstNode* selectorNode) {
    if (auto* lit = dynamic_cast<const LiteralNode*>(selectorNode))
        return lit->value.as<SymbolObject>();
    // Template instantiation can leave an identifier in the selector
    // slot (a hole filled with a selector node); its name is the
    // selector.
    if (auto* ident = dynamic_cast<const IdentifierNode*>(selectorNode))
        return ident->name;
    return nullptr;
}

/// Accepts `#name`, a bare identifier, or a quoted identifier as the
/// name argument of the let macros.
SymbolObject* nameFromNode(AstNode* node) {
    if (auto* lit = dynamic_cast<LiteralNode*>(node))
        return lit->value.as<SymbolObject>();
    if (auto* ident = dynamic_cast<IdentifierNode*>(node))
        return ident->name;
    if (auto* quote = dynamic_cast<QuoteNode*>(node))
        return nameFromNode(quote->inner);
    return nullptr;
}

/// Saves and forces the tree-walk engine for compile-time evaluation
/// (macro expansion, pure folding).
struct ForcedTreeWalk {
    Runtime& runtime;
    ExecutionEngine saved;
    explicit ForcedTreeWalk(Runtime& rt) : runtime(rt), saved(rt.engine) {
        runtime.engine = ExecutionEngine::TreeWalk;
    }
    ~ForcedTreeWalk() { runtime.engine = saved; }
};

} // namespace

// --- node construction helpers ---

LiteralNode* Analyzer::makeLiteral(const ObjectValue& value, TypeObject* type,
                                   const SourcePosition& position) {
    LiteralNode* node = makeNode<LiteralNode>(position);
    node->value = value;
    node->analyzedType = type ? type : rt.typeOf(value);
    return node;
}

AstNode* Analyzer::makeIntrinsicApplication(const std::string& intrinsicName,
                                            std::vector<AstNode*> arguments,
                                            TypeObject* resultType,
                                            const SourcePosition& position) {
    IntrinsicFunctionObject* fn = rt.intrinsicNamed(intrinsicName);
    if (!fn)
        throw EvaluationError("missing intrinsic '" + intrinsicName + "'");
    auto* app = makeNode<FunctionApplicationNode>(position);
    app->functional = makeLiteral(ObjectValue::heap(fn), rt.builtins.intrinsicFunction, position);
    app->arguments = std::move(arguments);
    app->analyzedType =
        resultType ? resultType : (fn->resultType ? fn->resultType : rt.builtins.dynamic);
    return app;
}

AstNode* Analyzer::autoLoadIfReference(AstNode* node, AnalysisContext&) {
    TypeObject* type = node->analyzedType;
    if (!type || type->typeKind != TypeKind::ReferenceTo)
        return node;
    TypeObject* base = type->baseType ? type->baseType : rt.builtins.dynamic;
    return makeIntrinsicApplication("refLoad", {node}, base, node->position);
}

uint32_t Analyzer::allocateLocal(AnalysisContext& ctx) {
    if (!ctx.currentFunction)
        throw EvaluationError("cannot allocate a local slot outside a function");
    return ctx.currentFunction->localSlotCount++;
}

// --- top-level driver ---

ObjectValue Analyzer::analyzeAndEvaluate(AstNode* node, EnvironmentObject* environment) {
    AnalysisContext ctx;
    ctx.environment = environment;
    ctx.evaluating = true;
    if (auto* seq = dynamic_cast<SequenceNode*>(node); seq && !seq->isAnalyzed()) {
        EnvironmentObject* env = environment;
        if (seq->freshScope) {
            auto* child = rt.make<EnvironmentObject>();
            child->type = rt.builtins.environmentType;
            child->parent = environment;
            env = child;
        }
        AnalysisContext inner = ctx;
        inner.environment = env;
        ObjectValue result = rt.voidValue;
        for (AstNode* statement : seq->expressions)
            result = evaluateStatement(statement, inner);
        return result;
    }
    return evaluateStatement(node, ctx);
}

ObjectValue Analyzer::evaluateStatement(AstNode* node, AnalysisContext& ctx) {
    AstNode* analyzed = analyze(node, ctx);
    analyzed = finishBuilderStatement(analyzed, ctx, node->position);
    EvalFrame frame;
    return evaluate(analyzed, frame);
}

AstNode* Analyzer::finishBuilderStatement(AstNode* analyzed, AnalysisContext& ctx,
                                          const SourcePosition& position) {
    auto* lit = dynamic_cast<LiteralNode*>(analyzed);
    if (!lit)
        return analyzed;
    MetabuilderObject* builder = asMetabuilder(lit->value);
    if (!builder || builder->finished)
        return analyzed;
    return builder->finishStatement(*this, ctx, position);
}

// --- analysis dispatch ---

AstNode* Analyzer::analyze(AstNode* node, AnalysisContext& ctx) {
    if (!node)
        throw EvaluationError("cannot analyze a missing node");
    if (node->isAnalyzed() && node->nodeKind != NodeKind::Literal)
        return node;
    switch (node->nodeKind) {
    case NodeKind::Literal:
        return analyzeLiteral(static_cast<LiteralNode*>(node), ctx);
    case NodeKind::Identifier:
        return analyzeIdentifier(static_cast<IdentifierNode*>(node), ctx, false);
    case NodeKind::MessageSend:
        return analyzeMessageSend(static_cast<MessageSendNode*>(node), ctx);
    case NodeKind::FunctionApplication:
        return analyzeApplication(static_cast<FunctionApplicationNode*>(node), ctx);
    case NodeKind::Cascade:
        return analyzeCascade(static_cast<CascadeNode*>(node), ctx);
    case NodeKind::Sequence:
        return analyzeSequence(static_cast<SequenceNode*>(node), ctx);
    case NodeKind::Lambda:
        return analyzeLambda(static_cast<LambdaNode*>(node), ctx);
    case NodeKind::Tuple: {
        auto* tuple = static_cast<TupleNode*>(node);
        std::vector<AstNode*> args;
        for (AstNode* element : tuple->elements)
            args.push_back(analyzeArgument(element, nullptr, ctx));
        return makeIntrinsicApplication("makeTuple", std::move(args), rt.builtins.tuple,
                                        node->position);
    }
    case NodeKind::MakeDictionary: {
        auto* dict = static_cast<MakeDictionaryNode*>(node);
        std::vector<AstNode*> args;
        for (auto& [key, value] : dict->pairs) {
            args.push_back(analyzeArgument(key, nullptr, ctx));
            args.push_back(analyzeArgument(value, nullptr, ctx));
        }
        return makeIntrinsicApplication("makeDictionary", std::move(args), rt.builtins.dictionary,
                                        node->position);
    }
    case NodeKind::MakeByteArray: {
        auto* bytes = static_cast<MakeByteArrayNode*>(node);
        std::vector<AstNode*> args;
        for (AstNode* element : bytes->elements)
            args.push_back(analyzeArgument(element, nullptr, ctx));
        return makeIntrinsicApplication("makeByteArray", std::move(args), rt.builtins.byteArray,
                                        node->position);
    }
    case NodeKind::LiteralArray: {
        // Literal arrays contain only literals; they fold to a value.
        std::function<ObjectValue(AstNode*)> valueOf = [&](AstNode* element) -> ObjectValue {
            if (auto* lit = dynamic_cast<LiteralNode*>(element))
                return lit->value;
            if (auto* nested = dynamic_cast<LiteralArrayNode*>(element)) {
                std::vector<ObjectValue> values;
                for (AstNode* inner : nested->elements)
                    values.push_back(valueOf(inner));
                return rt.makeObject(rt.builtins.array, std::move(values));
            }
            throw SemanticError(Kind::TypeMismatch, "literal arrays may only contain literals",
                                element->position);
        };
        return makeLiteral(valueOf(node), rt.builtins.array, node->position);
    }
    case NodeKind::Quote: {
        auto* quote = static_cast<QuoteNode*>(node);
        AstNode* copy = instantiateTemplate(rt, quote->inner, {});
        return makeLiteral(ObjectValue::heap(copy), rt.astNodeClassFor(copy->nodeKind),
                           node->position);
    }
    case NodeKind::QuasiQuote:
        return analyzeQuasiQuote(static_cast<QuasiQuoteNode*>(node), ctx);
    case NodeKind::QuasiUnquote:
        throw SemanticError(Kind::MacroError, "unquote outside a quasi-quote", node->position);
    case NodeKind::Splice:
        throw SemanticError(Kind::MacroError, "splice outside a quasi-quote", node->position);
    case NodeKind::If: {
        auto* ifNode = static_cast<IfNode*>(node);
        if (ctx.evaluating && !ctx.currentFunction) {
            // Staged top level: only the taken branch is analyzed.
            AnalysisContext condCtx = ctx;
            condCtx.evaluating = false;
            AstNode* condition = analyzeArgument(ifNode->condition, rt.builtins.boolean, condCtx);
            EvalFrame frame;
            bool taken = rt.booleanValue(evaluate(condition, frame));
            AstNode* branch = taken ? ifNode->thenExpression : ifNode->elseExpression;
            if (!branch)
                return makeLiteral(rt.nilValue, rt.builtins.undefinedObject, node->position);
            return analyze(branch, ctx);
        }
        ifNode->condition = analyzeArgument(ifNode->condition, rt.builtins.boolean, ctx);
        AnalysisContext branchCtx = ctx.withExpected(ctx.expectedType);
        ifNode->thenExpression =
            autoLoadIfReference(analyze(ifNode->thenExpression, branchCtx), ctx);
        if (ifNode->elseExpression)
            ifNode->elseExpression =
                autoLoadIfReference(analyze(ifNode->elseExpression, branchCtx), ctx);
        TypeObject* thenType = ifNode->thenExpression->analyzedType;
        TypeObject* elseType =
            ifNode->elseExpression ? ifNode->elseExpression->analyzedType : nullptr;
        ifNode->analyzedType = (elseType && thenType == elseType) ? thenType : rt.builtins.dynamic;
        return ifNode;
    }
    case NodeKind::While: {
        auto* whileNode = static_cast<WhileNode*>(node);
        if (ctx.evaluating && !ctx.currentFunction) {
            AnalysisContext condCtx = ctx;
            condCtx.evaluating = false;
            AstNode* condition =
                analyzeArgument(whileNode->condition, rt.builtins.boolean, condCtx);
            while (true) {
                EvalFrame frame;
                if (!rt.booleanValue(evaluate(condition, frame)))
                    break;
                // Fresh body instance per iteration, so definitions in
                // the body re-bind each time around.
                AstNode* body = instantiateTemplate(rt, whileNode->body, {});
                analyzeAndEvaluate(body, ctx.environment);
            }
            return makeLiteral(rt.voidValue, rt.builtins.voidType, node->position);
        }
        whileNode->condition = analyzeArgument(whileNode->condition, rt.builtins.boolean, ctx);
        AnalysisContext bodyCtx = ctx.withExpected(nullptr);
        whileNode->body = analyze(whileNode->body, bodyCtx);
        whileNode->analyzedType = rt.builtins.voidType;
        return whileNode;
    }
    case NodeKind::LocalDefinition: {
        auto* local = static_cast<LocalDefinitionNode*>(node);
        return analyzeLocalDefinition(ctx, local->name, nullptr, local->initialValue,
                                      local->isMutableCell, node->position);
    }
    case NodeKind::ArgumentReference:
    case NodeKind::CaptureReference:
    case NodeKind::LocalReference:
    case NodeKind::MakeClosure:
        return node; // only built in analyzed form
    case NodeKind::BuildNode:
    case NodeKind::TemplateHole:
        throw SemanticError(Kind::MacroError,
                            std::string("unexpected ") + nodeKindName(node->nodeKind) +
                                " node outside a quasi-quote template",
                            node->position);
    }
    throw EvaluationError("unhandled node kind in analysis");
}

// --- literals & identifiers ---

AstNode* Analyzer::coerceLiteral(LiteralNode* node, TypeObject* expected) {
    TypeObject* actual = node->analyzedType;
    if (!expected || expected == actual || expected == rt.builtins.dynamic)
        return node;
    if (rt.isPrimitiveIntegerType(expected) && actual == rt.builtins.integer) {
        BigInt value = rt.integerValueOf(node->value);
        if (wrapToWidth(value, expected->bits, expected->isSigned) != value)
            throw SemanticError(Kind::TypeMismatch,
                                "literal " + value.str() + " is not representable in " +
                                    typeName(expected),
                                node->position);
        return makeLiteral(rt.makePrimitiveInteger(value, expected), expected, node->position);
    }
    if (rt.isPrimitiveFloatType(expected)) {
        if (actual == rt.builtins.integer)
            return makeLiteral(
                rt.makeFloat(rt.integerValueOf(node->value).convert_to<double>(), expected),
                expected, node->position);
        if (rt.isPrimitiveFloatType(actual))
            return makeLiteral(rt.makeFloat(rt.floatValue(node->value), expected), expected,
                               node->position);
    }
    return node;
}

AstNode* Analyzer::analyzeLiteral(LiteralNode* node, AnalysisContext& ctx) {
    if (!node->isAnalyzed())
        node->analyzedType = rt.typeOf(node->value);
    return coerceLiteral(node, ctx.expectedType);
}

AstNode* Analyzer::resolveLocalName(FunctionScope* functionScope, LexicalScope* scope,
                                    SymbolObject* name, const SourcePosition& position) {
    if (!functionScope || !functionScope->definition)
        return nullptr;
    for (LexicalScope* s = scope; s && s->function == functionScope; s = s->parent) {
        if (const LocalBinding* binding = s->lookupHere(name)) {
            TypeObject* type = binding->type ? binding->type : rt.builtins.dynamic;
            if (binding->kind == LocalBinding::Kind::Argument) {
                auto* node = makeNode<ArgumentReferenceNode>(position);
                node->name = name;
                node->index = binding->index;
                node->analyzedType = type;
                return node;
            }
            auto* node = makeNode<LocalReferenceNode>(position);
            node->name = name;
            node->index = binding->index;
            node->isMutableCell = binding->isMutableCell;
            node->analyzedType = type;
            return node;
        }
    }
    FunctionDefinitionObject* definition = functionScope->definition;
    if (name->text == "self" && definition->selfType) {
        auto* node = makeNode<ArgumentReferenceNode>(position);
        node->name = name;
        node->index = 0;
        node->analyzedType = definition->selfType;
        return node;
    }
    if (!functionScope->parentFunction)
        return nullptr;
    for (size_t i = 0; i < definition->captures.size(); ++i) {
        if (definition->captures[i].name == name) {
            auto* node = makeNode<CaptureReferenceNode>(position);
            node->name = name;
            node->index = uint32_t(i);
            node->analyzedType =
                definition->captures[i].type ? definition->captures[i].type : rt.builtins.dynamic;
            return node;
        }
    }
    AstNode* outer = resolveLocalName(functionScope->parentFunction, functionScope->parentLexical,
                                      name, position);
    if (!outer)
        return nullptr;
    definition->captures.push_back({name, outer->analyzedType});
    functionScope->captureSources.push_back(outer);
    auto* node = makeNode<CaptureReferenceNode>(position);
    node->name = name;
    node->index = uint32_t(definition->captures.size() - 1);
    node->analyzedType = outer->analyzedType;
    return node;
}

AstNode* Analyzer::analyzeIdentifier(IdentifierNode* node, AnalysisContext& ctx,
                                     bool keepReference) {
    SymbolObject* name = node->name;
    if (ctx.currentFunction) {
        if (AstNode* local = resolveLocalName(ctx.functionScope, ctx.scope, name, node->position))
            return keepReference ? local : autoLoadIfReference(local, ctx);
        // Bare field names inside methods address the receiver's slots.
        for (FunctionScope* fs = ctx.functionScope; fs; fs = fs->parentFunction) {
            TypeObject* selfType = fs->definition ? fs->definition->selfType : nullptr;
            if (!selfType)
                continue;
            for (TypeObject* t = selfType; t; t = t->supertype) {
                for (const FieldSlot& slot : t->slotLayout) {
                    if (slot.name != name)
                        continue;
                    AstNode* self =
                        resolveLocalName(ctx.functionScope, ctx.scope, rt.intern("self"),
                                         node->position);
                    TypeObject* fieldType = slot.type ? slot.type : rt.builtins.dynamic;
                    AstNode* ref = makeIntrinsicApplication(
                        "slotRef",
                        {self, makeLiteral(rt.makeInteger(slot.index), rt.builtins.integer,
                                           node->position)},
                        rt.makeReferenceType(fieldType), node->position);
                    return keepReference ? ref : autoLoadIfReference(ref, ctx);
                }
            }
            break; // only the innermost method's receiver
        }
    }
    const Binding* binding = ctx.environment ? ctx.environment->lookup(name) : nullptr;
    if (!binding)
        throw SemanticError(Kind::UnboundIdentifier, "unbound identifier '" + name->text + "'",
                            node->position);
    switch (binding->kind) {
    case BindingKind::Value: {
        TypeObject* type = binding->valueType ? binding->valueType : rt.typeOf(binding->value);
        AstNode* literal = makeLiteral(binding->value, type, node->position);
        return keepReference ? literal : autoLoadIfReference(literal, ctx);
    }
    case BindingKind::MacroFactory: {
        ObjectValue builder = spawnBuilderFactory(rt, *binding);
        return makeLiteral(builder, rt.typeOf(builder), node->position);
    }
    case BindingKind::Macro:
        throw SemanticError(Kind::MacroError, "macro '" + name->text + "' used as a value",
                            node->position);
    }
    throw EvaluationError("unreachable binding kind");
}

// --- arguments & local definitions ---

AstNode* Analyzer::analyzeArgument(AstNode* node, TypeObject* expected, AnalysisContext& ctx) {
    AnalysisContext argCtx =
        ctx.withExpected(expected && expected != rt.builtins.dynamic ? expected : nullptr);
    AstNode* analyzed = analyze(node, argCtx);
    if (!(expected && expected->typeKind == TypeKind::ReferenceTo))
        analyzed = autoLoadIfReference(analyzed, ctx);
    if (auto* literal = dynamic_cast<LiteralNode*>(analyzed))
        analyzed = coerceLiteral(literal, expected);
    TypeObject* actual = analyzed->analyzedType;
    if (expected && expected != rt.builtins.dynamic && actual && actual != rt.builtins.dynamic &&
        actual != rt.builtins.undefinedObject && !actual->isKindOf(expected))
        throw SemanticError(Kind::TypeMismatch,
                            "expected a value of type " + typeName(expected) + ", got " +
                                typeName(actual),
                            node->position);
    return analyzed;
}

AstNode* Analyzer::analyzeLocalDefinition(AnalysisContext& ctx, SymbolObject* name,
                                          TypeObject* declaredType, AstNode* valueNode,
                                          bool isMutable, const SourcePosition& position) {
    if (!name)
        throw SemanticError(Kind::MacroError, "local definition needs a name", position);
    AstNode* value = analyzeArgument(valueNode, declaredType, ctx);
    TypeObject* type = declaredType
                           ? declaredType
                           : (value->analyzedType ? value->analyzedType : rt.builtins.dynamic);
    if (ctx.evaluating && !ctx.currentFunction) {
        EvalFrame frame;
        ObjectValue initial = evaluate(value, frame);
        Binding binding;
        if (isMutable) {
            TypeObject* refType = rt.makeReferenceType(type);
            binding.value = ObjectValue::heap(rt.makeCell(initial, refType));
            binding.valueType = refType;
            binding.isMutable = true;
        } else {
            binding.value = initial;
            binding.valueType = type;
        }
        ctx.environment->bind(name, binding);
        return makeLiteral(initial, type, position);
    }
    if (!ctx.currentFunction || !ctx.scope)
        throw SemanticError(Kind::MacroError,
                            "local definition outside a function body or the top level",
                            position);
    uint32_t index = allocateLocal(ctx);
    LocalBinding binding;
    binding.kind = LocalBinding::Kind::Local;
    binding.index = index;
    binding.type = isMutable ? rt.makeReferenceType(type) : type;
    binding.isMutableCell = isMutable;
    ctx.scope->bindings[name] = binding;
    auto* node = makeNode<LocalDefinitionNode>(position);
    node->name = name;
    node->index = index;
    node->initialValue = value;
    node->isMutableCell = isMutable;
    node->analyzedType = type;
    return node;
}

// --- message sends ---

AstNode* Analyzer::analyzeReceiver(AstNode* node, AnalysisContext& ctx) {
    if (auto* ident = dynamic_cast<IdentifierNode*>(node); ident && !ident->isAnalyzed())
        return analyzeIdentifier(ident, ctx, /*keepReference=*/true);
    AnalysisContext receiverCtx = ctx.withExpected(nullptr);
    return analyze(node, receiverCtx);
}

AstNode* Analyzer::analyzeMessageSend(MessageSendNode* node, AnalysisContext& ctx) {
    SymbolObject* selector = selectorSymbolOf(node->selector);

    if (!node->receiver) {
        // Receiver-less keyword sends resolve the selector in the
        // environment (macros and plain functions).
        if (!selector)
            throw SemanticError(Kind::MacroError, "computed selector requires a receiver",
                                node->position);
        const Binding* binding = ctx.environment ? ctx.environment->lookup(selector) : nullptr;
        if (!binding)
            throw SemanticError(Kind::UnboundIdentifier,
                                "unbound selector '" + selector->text + "'", node->position);
        if (binding->kind == BindingKind::Macro) {
            MacroDepthGuard guard(rt, node->position);
            return analyze(expandMacro(binding->value, nullptr, node->arguments, ctx,
                                       node->position),
                           ctx);
        }
        if (binding->kind == BindingKind::MacroFactory)
            throw SemanticError(Kind::MacroError,
                                "builder '" + selector->text +
                                    "' cannot be used as a keyword message",
                                node->position);
        auto* app = makeNode<FunctionApplicationNode>(node->position);
        TypeObject* type = binding->valueType ? binding->valueType : rt.typeOf(binding->value);
        app->functional = makeLiteral(binding->value, type, node->position);
        app->arguments = node->arguments;
        return analyzeExpandedApplication(app, ctx);
    }

    AstNode* receiver = analyzeReceiver(node->receiver, ctx);

    if (!selector) {
        // Computed selector: lower to a runtime dispatch call.
        AstNode* selectorNode = node->selector;
        if (auto* unquote = dynamic_cast<QuasiUnquoteNode*>(selectorNode))
            selectorNode = unquote->inner;
        std::vector<AstNode*> args;
        args.push_back(autoLoadIfReference(receiver, ctx));
        args.push_back(analyzeArgument(selectorNode, nullptr, ctx));
        for (AstNode* arg : node->arguments)
            args.push_back(analyzeArgument(arg, nullptr, ctx));
        return makeIntrinsicApplication("dispatch", std::move(args), rt.builtins.dynamic,
                                        node->position);
    }

    return analyzeMessageSendTo(receiver, selector, node->arguments, ctx, node->position);
}

AstNode* Analyzer::analyzeMessageSendTo(AstNode* receiver, SymbolObject* selector,
                                        std::span<AstNode* const> argumentNodes,
                                        AnalysisContext& ctx, const SourcePosition& position) {
    TypeObject* receiverType =
        receiver->analyzedType ? receiver->analyzedType : rt.builtins.dynamic;

    // References answer only store and address-of; any other message
    // auto-loads the referenced value first.
    if (receiverType->typeKind == TypeKind::ReferenceTo) {
        TypeObject* base = receiverType->baseType ? receiverType->baseType : rt.builtins.dynamic;
        if (selector->text == ":=" && argumentNodes.size() == 1) {
            AstNode* value = analyzeArgument(argumentNodes[0], base, ctx);
            return makeIntrinsicApplication("refStore", {receiver, value}, base, position);
        }
        if (selector->text == "address" && argumentNodes.empty())
            return makeIntrinsicApplication("refAddress", {receiver},
                                            rt.makePointerType(base), position);
        receiver = autoLoadIfReference(receiver, ctx);
        receiverType = receiver->analyzedType ? receiver->analyzedType : rt.builtins.dynamic;
    }

    // Dereferencing a statically-typed pointer yields a reference to
    // the pointee, so reads auto-load like any other reference.
    if (receiverType->typeKind == TypeKind::PointerTo && selector->text == "_" &&
        argumentNodes.empty()) {
        TypeObject* base = receiverType->baseType ? receiverType->baseType : rt.builtins.dynamic;
        return makeIntrinsicApplication("pointerDeref", {receiver}, rt.makeReferenceType(base),
                                        position);
    }

    if (receiverType->delegatesSendsToInstance) {
        auto* literal = dynamic_cast<LiteralNode*>(receiver);
        MetabuilderObject* builder = literal ? asMetabuilder(literal->value) : nullptr;
        if (!builder)
            throw SemanticError(Kind::MacroError,
                                "message '" + selector->text +
                                    "' requires a literal builder receiver",
                                position);
        return builder->handleMessage(*this, ctx, selector, argumentNodes, position);
    }

    if (receiverType->typeKind == TypeKind::Dynamic) {
        auto* send = makeNode<MessageSendNode>(position);
        send->receiver = receiver;
        send->selector = makeLiteral(ObjectValue::heap(selector), rt.builtins.symbol, position);
        for (AstNode* arg : argumentNodes)
            send->arguments.push_back(analyzeArgument(arg, nullptr, ctx));
        send->dynamicDispatch = true;
        send->analyzedType = rt.builtins.dynamic;
        return send;
    }

    const MethodEntry* entry = lookupSelector(receiverType, selector);
    if (!entry)
        throw SemanticError(Kind::NoSuchMethod,
                            typeName(receiverType) + " does not understand '" + selector->text +
                                "'",
                            position);

    if (entry->isMacro) {
        MacroDepthGuard guard(rt, position);
        return analyze(expandMacro(entry->target, receiver, argumentNodes, ctx, position), ctx);
    }

    if (!entry->staticDispatch) {
        auto* definition = entry->target.as<FunctionDefinitionObject>();
        auto* send = makeNode<MessageSendNode>(position);
        send->receiver = receiver;
        send->selector = makeLiteral(ObjectValue::heap(selector), rt.builtins.symbol, position);
        if (definition && argumentNodes.size() != definition->parameters.size())
            throw SemanticError(Kind::ArityMismatch,
                                "'" + selector->text + "' expects " +
                                    std::to_string(definition->parameters.size()) +
                                    " arguments, got " + std::to_string(argumentNodes.size()),
                                position);
        for (size_t i = 0; i < argumentNodes.size(); ++i) {
            TypeObject* expected = definition ? definition->parameters[i].type : nullptr;
            send->arguments.push_back(analyzeArgument(argumentNodes[i], expected, ctx));
        }
        send->dynamicDispatch = true;
        send->analyzedType = definition && definition->resultType ? definition->resultType
                                                                  : rt.builtins.dynamic;
        return send;
    }

    auto* app = makeNode<FunctionApplicationNode>(position);
    TypeObject* targetType = rt.typeOf(entry->target);
    app->functional = makeLiteral(entry->target, targetType, position);
    app->arguments.push_back(receiver);
    app->arguments.insert(app->arguments.end(), argumentNodes.begin(), argumentNodes.end());
    AstNode* result = analyzeExpandedApplication(app, ctx);

    // Constructor sends on a literal type produce instances of it.
    if (auto* receiverLiteral = dynamic_cast<LiteralNode*>(receiver)) {
        if (auto* constructed = receiverLiteral->value.as<TypeObject>()) {
            bool isConstructor = selector->text == "new" || selector->text == "new:" ||
                                 selector->text.rfind("with:", 0) == 0;
            if (isConstructor && !dynamic_cast<LiteralNode*>(result))
                result->analyzedType = constructed;
        }
    }
    return result;
}

// --- applications ---

AstNode* Analyzer::analyzeApplication(FunctionApplicationNode* node, AnalysisContext& ctx) {
    if (auto* ident = dynamic_cast<IdentifierNode*>(node->functional)) {
        const Binding* binding = ctx.environment ? ctx.environment->lookup(ident->name) : nullptr;
        if (binding && binding->kind == BindingKind::Macro) {
            MacroDepthGuard guard(rt, node->position);
            return analyze(expandMacro(binding->value, nullptr, node->arguments, ctx,
                                       node->position),
                           ctx);
        }
    }
    node->functional = analyzeReceiver(node->functional, ctx);
    node->functional = autoLoadIfReference(node->functional, ctx);
    return analyzeExpandedApplication(node, ctx);
}

AstNode* Analyzer::analyzeExpandedApplication(FunctionApplicationNode* node,
                                              AnalysisContext& ctx) {
    auto* literal = dynamic_cast<LiteralNode*>(node->functional);
    if (!literal) {
        for (AstNode*& arg : node->arguments)
            arg = analyzeArgument(arg, nullptr, ctx);
        node->analyzedType = rt.builtins.dynamic;
        return node;
    }
    const ObjectValue& functional = literal->value;

    if (MetabuilderObject* builder = asMetabuilder(functional))
        return builder->handleApplication(*this, ctx, node->arguments, node->position);

    if (functional.isA<NativeMacroObject>()) {
        MacroDepthGuard guard(rt, node->position);
        return analyze(expandMacro(functional, nullptr, node->arguments, ctx, node->position),
                       ctx);
    }

    if (auto* intrinsic = functional.as<IntrinsicFunctionObject>()) {
        if (!intrinsic->variadic && node->arguments.size() != intrinsic->argumentTypes.size())
            throw SemanticError(Kind::ArityMismatch,
                                "'" + intrinsic->name->text + "' expects " +
                                    std::to_string(intrinsic->argumentTypes.size()) +
                                    " arguments, got " + std::to_string(node->arguments.size()),
                                node->position);
        for (size_t i = 0; i < node->arguments.size(); ++i) {
            TypeObject* expected =
                i < intrinsic->argumentTypes.size() ? intrinsic->argumentTypes[i] : nullptr;
            node->arguments[i] = analyzeArgument(node->arguments[i], expected, ctx);
        }
        node->analyzedType = intrinsic->resultType ? intrinsic->resultType : rt.builtins.dynamic;
        return intrinsic->pure ? foldIfPure(node, ctx) : node;
    }

    FunctionDefinitionObject* definition = functional.as<FunctionDefinitionObject>();
    ClosureObject* closure = functional.as<ClosureObject>();
    if (closure)
        definition = closure->definition;
    if (auto* entity = functional.as<FunctionEntityObject>())
        definition = entity->definition;
    if (definition) {
        if (definition->isMacro()) {
            MacroDepthGuard guard(rt, node->position);
            return analyze(expandMacro(functional, nullptr, node->arguments, ctx, node->position),
                           ctx);
        }
        if (node->arguments.size() != definition->arity())
            throw SemanticError(Kind::ArityMismatch,
                                "function expects " + std::to_string(definition->arity()) +
                                    " arguments, got " + std::to_string(node->arguments.size()),
                                node->position);
        size_t offset = definition->selfType ? 1 : 0;
        for (size_t i = 0; i < node->arguments.size(); ++i) {
            TypeObject* expected = (i == 0 && offset == 1)
                                       ? definition->selfType
                                       : definition->parameters[i - offset].type;
            node->arguments[i] = analyzeArgument(node->arguments[i], expected, ctx);
        }
        node->analyzedType =
            definition->resultType ? definition->resultType : rt.builtins.dynamic;
        return definition->isPure() ? foldIfPure(node, ctx) : node;
    }

    throw SemanticError(Kind::TypeMismatch,
                        "value of type " + typeName(literal->analyzedType) + " is not applicable",
                        node->position);
}

AstNode* Analyzer::foldIfPure(FunctionApplicationNode* node, AnalysisContext& ctx) {
    auto* functional = dynamic_cast<LiteralNode*>(node->functional);
    if (!functional)
        return node;
    std::vector<ObjectValue> argumentValues;
    argumentValues.reserve(node->arguments.size());
    for (AstNode* arg : node->arguments) {
        auto* literal = dynamic_cast<LiteralNode*>(arg);
        if (!literal)
            return node;
        argumentValues.push_back(literal->value);
    }
    ObjectValue result;
    try {
        ForcedTreeWalk forced(rt);
        result = rt.call(functional->value, argumentValues);
    } catch (const SemanticError&) {
        throw;
    } catch (const EvaluationError& error) {
        throw SemanticError(Kind::TypeMismatch,
                            std::string("compile-time evaluation failed: ") + error.what(),
                            node->position);
    }
    LiteralNode* folded = makeLiteral(result, rt.typeOf(result), node->position);
    return coerceLiteral(folded, ctx.expectedType);
}

// --- sequences, lambdas, cascades ---

AstNode* Analyzer::analyzeSequence(SequenceNode* node, AnalysisContext& ctx) {
    if (ctx.evaluating && !ctx.currentFunction) {
        EnvironmentObject* env = ctx.environment;
        if (node->freshScope) {
            auto* child = rt.make<EnvironmentObject>();
            child->type = rt.builtins.environmentType;
            child->parent = env;
            env = child;
        }
        AnalysisContext inner = ctx;
        inner.environment = env;
        inner.expectedType = nullptr;
        ObjectValue result = rt.voidValue;
        for (AstNode* statement : node->expressions)
            result = evaluateStatement(statement, inner);
        return makeLiteral(result, rt.typeOf(result), node->position);
    }

    LexicalScope fresh;
    AnalysisContext inner = ctx;
    inner.expectedType = nullptr;
    if (node->freshScope) {
        fresh.parent = ctx.scope;
        fresh.function = ctx.functionScope;
        inner.scope = &fresh;
    }
    for (size_t i = 0; i < node->expressions.size(); ++i) {
        AnalysisContext statementCtx =
            (i + 1 == node->expressions.size()) ? inner.withExpected(ctx.expectedType) : inner;
        AstNode* analyzed = analyze(node->expressions[i], statementCtx);
        analyzed = finishBuilderStatement(analyzed, statementCtx,
                                          node->expressions[i]->position);
        node->expressions[i] = analyzed;
    }
    node->analyzedType = node->expressions.empty() ? rt.builtins.voidType
                                                   : node->expressions.back()->analyzedType;
    return node;
}

AstNode* Analyzer::analyzeLambda(LambdaNode* node, AnalysisContext& ctx) {
    auto* definition = rt.make<FunctionDefinitionObject>();
    definition->type = rt.builtins.functionDefinition;
    definition->definitionEnvironment = ctx.environment;
    definition->bodyNode = node->body;
    for (const LambdaArgument& arg : node->argumentNodes) {
        TypeObject* type =
            arg.typeNode ? evaluateTypeExpression(arg.typeNode, ctx) : rt.builtins.dynamic;
        definition->parameters.push_back({arg.name, type, nullptr});
    }
    if (node->resultTypeNode)
        definition->resultType = evaluateTypeExpression(node->resultTypeNode, ctx);

    if (ctx.currentFunction) {
        // Nested lambdas analyze eagerly so captures are known here.
        FunctionScope functionScope;
        functionScope.parentFunction = ctx.functionScope;
        functionScope.parentLexical = ctx.scope;
        functionScope.definition = definition;
        analyzeFunctionBody(definition, functionScope);
        if (!definition->captures.empty()) {
            auto* makeClosure = makeNode<MakeClosureNode>(node->position);
            makeClosure->definition = definition;
            makeClosure->captureSources = functionScope.captureSources;
            makeClosure->analyzedType = rt.builtins.closure;
            return makeClosure;
        }
    }
    return makeLiteral(ObjectValue::heap(definition), rt.builtins.functionDefinition,
                       node->position);
}

void Analyzer::analyzeFunctionBody(FunctionDefinitionObject* definition,
                                   FunctionScope& functionScope) {
    if (definition->analysisInProgress)
        throw EvaluationError("recursive compile-time use of a function still being analyzed");
    definition->analysisInProgress = true;
    struct Reset {
        FunctionDefinitionObject* definition;
        ~Reset() { definition->analysisInProgress = false; }
    } reset{definition};

    LexicalScope argumentScope;
    argumentScope.function = &functionScope;
    uint32_t offset = definition->selfType ? 1 : 0;
    for (uint32_t i = 0; i < definition->parameters.size(); ++i) {
        LocalBinding binding;
        binding.kind = LocalBinding::Kind::Argument;
        binding.index = i + offset;
        binding.type = definition->parameters[i].type;
        argumentScope.bindings[definition->parameters[i].name] = binding;
    }
    AnalysisContext ctx;
    ctx.environment = definition->definitionEnvironment
                          ? definition->definitionEnvironment
                          : rt.globalEnvironment();
    ctx.currentFunction = definition;
    ctx.functionScope = &functionScope;
    ctx.scope = &argumentScope;
    ctx.expectedType = definition->resultType;
    AstNode* analyzed = analyze(definition->bodyNode, ctx);
    analyzed = autoLoadIfReference(analyzed, ctx);
    if (auto* literal = dynamic_cast<LiteralNode*>(analyzed); literal && definition->resultType)
        analyzed = coerceLiteral(literal, definition->resultType);
    definition->analyzedBody = analyzed;
}

void Analyzer::ensureAnalyzed(FunctionDefinitionObject* definition) {
    if (definition->analyzedBody)
        return;
    if (!definition->bodyNode)
        throw EvaluationError("function definition has no body");
    FunctionScope functionScope;
    functionScope.definition = definition;
    analyzeFunctionBody(definition, functionScope);
}

AstNode* Analyzer::analyzeCascade(CascadeNode* node, AnalysisContext& ctx) {
    AstNode* receiver = analyzeReceiver(node->receiver, ctx);

    // At the staged top level a non-literal receiver is evaluated once,
    // here, so the messages can target a literal.
    if (!dynamic_cast<LiteralNode*>(receiver) && ctx.evaluating && !ctx.currentFunction) {
        EvalFrame frame;
        ObjectValue value = evaluate(receiver, frame);
        TypeObject* type = receiver->analyzedType && receiver->analyzedType != rt.builtins.dynamic
                               ? receiver->analyzedType
                               : rt.typeOf(value);
        receiver = makeLiteral(value, type, node->position);
    }

    auto analyzeMessages = [&](AstNode* target) -> AstNode* {
        auto* sequence = makeNode<SequenceNode>(node->position);
        AstNode* last = nullptr;
        for (const CascadeMessage& message : node->messages) {
            SymbolObject* selector = selectorSymbolOf(message.selector);
            if (!selector)
                throw SemanticError(Kind::MacroError, "cascade selectors must be literal",
                                    node->position);
            last = analyzeMessageSendTo(target, selector, message.arguments, ctx,
                                        node->position);
            sequence->expressions.push_back(last);
        }
        if (!last)
            return target;
        if (sequence->expressions.size() == 1)
            return last;
        sequence->analyzedType = last->analyzedType;
        return sequence;
    };

    if (dynamic_cast<LiteralNode*>(receiver))
        return analyzeMessages(receiver);

    // Inside a function the receiver value goes to a hidden local.
    uint32_t index = allocateLocal(ctx);
    TypeObject* receiverType =
        receiver->analyzedType ? receiver->analyzedType : rt.builtins.dynamic;
    auto* definition = makeNode<LocalDefinitionNode>(node->position);
    definition->name = rt.intern("<cascade>");
    definition->index = index;
    definition->initialValue = receiver;
    definition->analyzedType = receiverType;

    auto* sequence = makeNode<SequenceNode>(node->position);
    sequence->expressions.push_back(definition);
    AstNode* last = definition;
    for (const CascadeMessage& message : node->messages) {
        SymbolObject* selector = selectorSymbolOf(message.selector);
        if (!selector)
            throw SemanticError(Kind::MacroError, "cascade selectors must be literal",
                                node->position);
        auto* reference = makeNode<LocalReferenceNode>(node->position);
        reference->name = definition->name;
        reference->index = index;
        reference->analyzedType = receiverType;
        last = analyzeMessageSendTo(reference, selector, message.arguments, ctx, node->position);
        sequence->expressions.push_back(last);
    }
    sequence->analyzedType = last->analyzedType;
    return sequence;
}

// --- quasi-quote ---

namespace {

/// Clones a quasi-quote body into a build template: unquotes at depth
/// one become hole markers whose expressions are analyzed in the
/// current context.
struct TemplateBuilder {
    Analyzer& analyzer;
    AnalysisContext& ctx;
    std::vector<AstNode*> holes;

    template <typename T>
    T* fresh(const AstNode* original) {
        return analyzer.makeNode<T>(original->position);
    }

    std::vector<AstNode*> cloneList(const std::vector<AstNode*>& nodes, int depth) {
        std::vector<AstNode*> result;
        result.reserve(nodes.size());
        for (AstNode* node : nodes) {
            if (auto* splice = dynamic_cast<SpliceNode*>(node); splice && depth == 1) {
                auto* hole = fresh<TemplateHoleNode>(node);
                hole->holeIndex = addHole(splice->inner);
                hole->isSplice = true;
                result.push_back(hole);
                continue;
            }
            result.push_back(clone(node, depth));
        }
        return result;
    }

    uint32_t addHole(AstNode* expression) {
        holes.push_back(analyzer.analyzeArgument(expression, nullptr, ctx));
        return uint32_t(holes.size() - 1);
    }

    AstNode* clone(AstNode* node, int depth) {
        switch (node->nodeKind) {
        case NodeKind::Literal: {
            auto* copy = fresh<LiteralNode>(node);
            copy->value = static_cast<LiteralNode*>(node)->value;
            return copy;
        }
        case NodeKind::Identifier: {
            auto* copy = fresh<IdentifierNode>(node);
            copy->name = static_cast<IdentifierNode*>(node)->name;
            return copy;
        }
        case NodeKind::MessageSend: {
            auto* original = static_cast<MessageSendNode*>(node);
            auto* copy = fresh<MessageSendNode>(node);
            copy->receiver = original->receiver ? clone(original->receiver, depth) : nullptr;
            copy->selector = clone(original->selector, depth);
            copy->arguments = cloneList(original->arguments, depth);
            return copy;
        }
        case NodeKind::FunctionApplication: {
            auto* original = static_cast<FunctionApplicationNode*>(node);
            auto* copy = fresh<FunctionApplicationNode>(node);
            copy->functional = clone(original->functional, depth);
            copy->arguments = cloneList(original->arguments, depth);
            return copy;
        }
        case NodeKind::Cascade: {
            auto* original = static_cast<CascadeNode*>(node);
            auto* copy = fresh<CascadeNode>(node);
            copy->receiver = clone(original->receiver, depth);
            for (const CascadeMessage& message : original->messages)
                copy->messages.push_back(
                    {clone(message.selector, depth), cloneList(message.arguments, depth)});
            return copy;
        }
        case NodeKind::Sequence: {
            auto* original = static_cast<SequenceNode*>(node);
            auto* copy = fresh<SequenceNode>(node);
            copy->freshScope = original->freshScope;
            copy->expressions = cloneList(original->expressions, depth);
            return copy;
        }
        case NodeKind::Lambda: {
            auto* original = static_cast<LambdaNode*>(node);
            auto* copy = fresh<LambdaNode>(node);
            for (const LambdaArgument& arg : original->argumentNodes)
                copy->argumentNodes.push_back(
                    {arg.name, arg.typeNode ? clone(arg.typeNode, depth) : nullptr});
            copy->resultTypeNode =
                original->resultTypeNode ? clone(original->resultTypeNode, depth) : nullptr;
            copy->body = clone(original->body, depth);
            return copy;
        }
        case NodeKind::Tuple: {
            auto* copy = fresh<TupleNode>(node);
            copy->elements = cloneList(static_cast<TupleNode*>(node)->elements, depth);
            return copy;
        }
        case NodeKind::MakeDictionary: {
            auto* original = static_cast<MakeDictionaryNode*>(node);
            auto* copy = fresh<MakeDictionaryNode>(node);
            for (auto& [key, value] : original->pairs)
                copy->pairs.push_back({clone(key, depth), clone(value, depth)});
            return copy;
        }
        case NodeKind::MakeByteArray: {
            auto* copy = fresh<MakeByteArrayNode>(node);
            copy->elements = cloneList(static_cast<MakeByteArrayNode*>(node)->elements, depth);
            return copy;
        }
        case NodeKind::LiteralArray: {
            auto* copy = fresh<LiteralArrayNode>(node);
            copy->elements = cloneList(static_cast<LiteralArrayNode*>(node)->elements, depth);
            return copy;
        }
        case NodeKind::Quote: {
            auto* copy = fresh<QuoteNode>(node);
            copy->inner = clone(static_cast<QuoteNode*>(node)->inner, depth);
            return copy;
        }
        case NodeKind::QuasiQuote: {
            auto* copy = fresh<QuasiQuoteNode>(node);
            copy->inner = clone(static_cast<QuasiQuoteNode*>(node)->inner, depth + 1);
            return copy;
        }
        case NodeKind::QuasiUnquote: {
            auto* original = static_cast<QuasiUnquoteNode*>(node);
            if (depth == 1) {
                auto* hole = fresh<TemplateHoleNode>(node);
                hole->holeIndex = addHole(original->inner);
                hole->isSplice = false;
                return hole;
            }
            auto* copy = fresh<QuasiUnquoteNode>(node);
            copy->inner = clone(original->inner, depth - 1);
            return copy;
        }
        case NodeKind::Splice:
            throw SemanticError(Kind::MacroError, "splice outside an argument-list position",
                                node->position);
        default:
            throw SemanticError(Kind::MacroError, "cannot quote analyzed code", node->position);
        }
    }
};

} // namespace

AstNode* Analyzer::analyzeQuasiQuote(QuasiQuoteNode* node, AnalysisContext& ctx) {
    TemplateBuilder builder{*this, ctx, {}};
    AstNode* templateRoot = builder.clone(node->inner, 1);
    std::vector<AstNode*> args;
    args.reserve(builder.holes.size() + 1);
    args.push_back(makeLiteral(ObjectValue::heap(templateRoot),
                               rt.astNodeClassFor(templateRoot->nodeKind), node->position));
    for (AstNode* hole : builder.holes)
        args.push_back(hole);
    return makeIntrinsicApplication("buildNode", std::move(args),
                                    rt.astNodeClassFor(templateRoot->nodeKind), node->position);
}

// --- macros ---

AstNode* Analyzer::expandMacro(const ObjectValue& target, AstNode* receiver,
                               std::span<AstNode* const> arguments, AnalysisContext& ctx,
                               const SourcePosition& position) {
    if (auto* native = target.as<NativeMacroObject>()) {
        MacroContext macroCtx{*this, ctx, position};
        AstNode* result = native->handler(macroCtx, receiver, arguments);
        return result ? result : makeLiteral(rt.voidValue, rt.builtins.voidType, position);
    }
    FunctionDefinitionObject* definition = target.as<FunctionDefinitionObject>();
    ClosureObject* closure = target.as<ClosureObject>();
    if (closure)
        definition = closure->definition;
    if (auto* entity = target.as<FunctionEntityObject>())
        definition = entity->definition;
    if (!definition)
        throw SemanticError(Kind::MacroError, "invalid macro target", position);

    std::vector<ObjectValue> values;
    if (receiver && definition->arity() == arguments.size() + 1)
        values.push_back(ObjectValue::heap(receiver));
    for (AstNode* arg : arguments)
        values.push_back(ObjectValue::heap(arg));
    if (values.size() != definition->arity())
        throw SemanticError(Kind::ArityMismatch,
                            "macro expects " + std::to_string(definition->arity()) +
                                " arguments, got " + std::to_string(values.size()),
                            position);
    ObjectValue result;
    try {
        ForcedTreeWalk forced(rt);
        result = rt.call(ObjectValue::heap(closure ? (Object*)closure : (Object*)definition),
                         values);
    } catch (const SemanticError&) {
        throw;
    } catch (const EvaluationError& error) {
        throw SemanticError(Kind::MacroError,
                            std::string("macro expansion failed: ") + error.what(), position);
    }
    if (auto* expansion = result.as<AstNode>())
        return expansion;
    return makeLiteral(result, rt.typeOf(result), position);
}

TypeObject* Analyzer::evaluateTypeExpression(AstNode* node, AnalysisContext& ctx) {
    AnalysisContext typeCtx = ctx.withExpected(rt.builtins.type);
    AstNode* analyzed = autoLoadIfReference(analyze(node, typeCtx), ctx);
    if (auto* literal = dynamic_cast<LiteralNode*>(analyzed)) {
        // Top-level sequences evaluate to literals; unwrap values that
        // are themselves types.
        if (auto* type = literal->value.as<TypeObject>())
            return type;
    }
    throw SemanticError(Kind::TypeMismatch, "expected a compile-time type expression",
                        node->position);
}

// --- evaluation ---

ObjectValue Analyzer::evaluate(AstNode* node, EvalFrame& frame) {
    switch (node->nodeKind) {
    case NodeKind::Literal:
        return static_cast<LiteralNode*>(node)->value;
    case NodeKind::ArgumentReference: {
        auto* ref = static_cast<ArgumentReferenceNode*>(node);
        if (ref->index >= frame.arguments.size())
            throw EvaluationError("argument index out of range");
        return frame.arguments[ref->index];
    }
    case NodeKind::CaptureReference: {
        auto* ref = static_cast<CaptureReferenceNode*>(node);
        if (!frame.closure || ref->index >= frame.closure->captureVector.size())
            throw EvaluationError("capture index out of range");
        return frame.closure->captureVector[ref->index];
    }
    case NodeKind::LocalReference: {
        auto* ref = static_cast<LocalReferenceNode*>(node);
        if (ref->index >= frame.locals.size())
            throw EvaluationError("local slot out of range");
        return frame.locals[ref->index];
    }
    case NodeKind::LocalDefinition: {
        auto* definition = static_cast<LocalDefinitionNode*>(node);
        ObjectValue value = evaluate(definition->initialValue, frame);
        if (definition->index >= frame.locals.size())
            frame.locals.resize(definition->index + 1, rt.nilValue);
        if (definition->isMutableCell) {
            TypeObject* base =
                definition->analyzedType ? definition->analyzedType : rt.builtins.dynamic;
            frame.locals[definition->index] =
                ObjectValue::heap(rt.makeCell(value, rt.makeReferenceType(base)));
        } else {
            frame.locals[definition->index] = value;
        }
        return value;
    }
    case NodeKind::Sequence: {
        auto* sequence = static_cast<SequenceNode*>(node);
        ObjectValue result = rt.voidValue;
        for (AstNode* expression : sequence->expressions)
            result = evaluate(expression, frame);
        return result;
    }
    case NodeKind::If: {
        auto* ifNode = static_cast<IfNode*>(node);
        bool taken = rt.booleanValue(evaluate(ifNode->condition, frame));
        if (taken)
            return evaluate(ifNode->thenExpression, frame);
        return ifNode->elseExpression ? evaluate(ifNode->elseExpression, frame) : rt.nilValue;
    }
    case NodeKind::While: {
        auto* whileNode = static_cast<WhileNode*>(node);
        while (rt.booleanValue(evaluate(whileNode->condition, frame)))
            evaluate(whileNode->body, frame);
        return rt.voidValue;
    }
    case NodeKind::MakeClosure: {
        auto* make = static_cast<MakeClosureNode*>(node);
        auto* closure = rt.make<ClosureObject>();
        closure->type = rt.builtins.closure;
        closure->definition = make->definition;
        closure->captureVector.reserve(make->captureSources.size());
        for (AstNode* source : make->captureSources)
            closure->captureVector.push_back(evaluate(source, frame));
        return ObjectValue::heap(closure);
    }
    case NodeKind::FunctionApplication: {
        auto* application = static_cast<FunctionApplicationNode*>(node);
        ObjectValue functional = evaluate(application->functional, frame);
        std::vector<ObjectValue> arguments;
        arguments.reserve(application->arguments.size());
        for (AstNode* arg : application->arguments)
            arguments.push_back(evaluate(arg, frame));
        return rt.call(functional, arguments);
    }
    case NodeKind::MessageSend: {
        auto* send = static_cast<MessageSendNode*>(node);
        if (!send->receiver)
            throw EvaluationError("cannot evaluate an unanalyzed message send");
        ObjectValue receiver = evaluate(send->receiver, frame);
        SymbolObject* selector = selectorSymbolOf(send->selector);
        if (!selector)
            throw EvaluationError("cannot evaluate a send without a literal selector");
        std::vector<ObjectValue> arguments;
        arguments.reserve(send->arguments.size());
        for (AstNode* arg : send->arguments)
            arguments.push_back(evaluate(arg, frame));
        return rt.dispatchMessage(receiver, selector, arguments);
    }
    default:
        throw EvaluationError(std::string("cannot evaluate unanalyzed node kind ") +
                              nodeKindName(node->nodeKind));
    }
}

ObjectValue Analyzer::callTreeWalk(FunctionDefinitionObject* definition, ClosureObject* closure,
                                   std::span<const ObjectValue> arguments) {
    ensureAnalyzed(definition);
    ActivationDepthGuard guard(rt);
    EvalFrame frame;
    frame.arguments = arguments;
    frame.locals.assign(definition->localSlotCount, rt.nilValue);
    frame.closure = closure;
    return evaluate(definition->analyzedBody, frame);
}

// --- native macros ---

void installNativeMacros(Runtime& rt) {
    EnvironmentObject* global = rt.globalEnvironment();

    auto makeNative = [&](const char* name, NativeMacroHandler handler) {
        auto* macro = rt.make<NativeMacroObject>();
        macro->type = rt.builtins.object;
        macro->name = rt.intern(name);
        macro->handler = std::move(handler);
        rt.registerBuiltin(std::string("macro:") + name, ObjectValue::heap(macro));
        return macro;
    };
    auto bindGlobal = [&](const char* name, NativeMacroHandler handler) {
        NativeMacroObject* macro = makeNative(name, std::move(handler));
        Binding binding;
        binding.value = ObjectValue::heap(macro);
        binding.valueType = rt.builtins.object;
        binding.kind = BindingKind::Macro;
        global->bind(macro->name, binding);
    };

    bindGlobal("let:with:",
               [](MacroContext& mc, AstNode*, std::span<AstNode* const> args) -> AstNode* {
                   if (args.size() != 2)
                       throw SemanticError(Kind::ArityMismatch,
                                           "let:with: expects a name and a value", mc.position);
                   SymbolObject* name = nameFromNode(args[0]);
                   if (!name)
                       throw SemanticError(Kind::MacroError, "let:with: name must be a symbol",
                                           mc.position);
                   return mc.analyzer.analyzeLocalDefinition(mc.analysis, name, nullptr, args[1],
                                                             false, mc.position);
               });

    bindGlobal("let:type:with:",
               [](MacroContext& mc, AstNode*, std::span<AstNode* const> args) -> AstNode* {
                   if (args.size() != 3)
                       throw SemanticError(Kind::ArityMismatch,
                                           "let:type:with: expects a name, a type and a value",
                                           mc.position);
                   SymbolObject* name = nameFromNode(args[0]);
                   if (!name)
                       throw SemanticError(Kind::MacroError,
                                           "let:type:with: name must be a symbol", mc.position);
                   TypeObject* type = mc.analyzer.evaluateTypeExpression(args[1], mc.analysis);
                   return mc.analyzer.analyzeLocalDefinition(mc.analysis, name, type, args[2],
                                                             false, mc.position);
               });

    auto makeIf = [](MacroContext& mc, AstNode* condition, AstNode* thenBranch,
                     AstNode* elseBranch) -> AstNode* {
        auto* node = mc.analyzer.makeNode<IfNode>(mc.position);
        node->condition = condition;
        node->thenExpression = thenBranch;
        node->elseExpression = elseBranch;
        return mc.analyzer.analyze(node, mc.analysis);
    };

    bindGlobal("if:then:",
               [makeIf](MacroContext& mc, AstNode*, std::span<AstNode* const> args) -> AstNode* {
                   if (args.size() != 2)
                       throw SemanticError(Kind::ArityMismatch,
                                           "if:then: expects a condition and a branch",
                                           mc.position);
                   return makeIf(mc, args[0], args[1], nullptr);
               });

    bindGlobal("if:then:else:",
               [makeIf](MacroContext& mc, AstNode*, std::span<AstNode* const> args) -> AstNode* {
                   if (args.size() != 3)
                       throw SemanticError(Kind::ArityMismatch,
                                           "if:then:else: expects a condition and two branches",
                                           mc.position);
                   return makeIf(mc, args[0], args[1], args[2]);
               });

    bindGlobal("while:do:",
               [](MacroContext& mc, AstNode*, std::span<AstNode* const> args) -> AstNode* {
                   if (args.size() != 2)
                       throw SemanticError(Kind::ArityMismatch,
                                           "while:do: expects a condition and a body",
                                           mc.position);
                   auto* node = mc.analyzer.makeNode<WhileNode>(mc.position);
                   node->condition = args[0];
                   node->body = args[1];
                   return mc.analyzer.analyze(node, mc.analysis);
               });

    // Short-circuit boolean combinators expand to conditionals.
    auto installBooleanMacro = [&](const char* selector, bool isAnd) {
        NativeMacroObject* macro = makeNative(
            (std::string("Boolean::") + selector).c_str(),
            [isAnd](MacroContext& mc, AstNode* receiver,
                    std::span<AstNode* const> args) -> AstNode* {
                if (!receiver || args.size() != 1)
                    throw SemanticError(Kind::ArityMismatch,
                                        "boolean combinator expects a receiver and one argument",
                                        mc.position);
                Analyzer& an = mc.analyzer;
                auto* node = an.makeNode<IfNode>(mc.position);
                node->condition = receiver;
                if (isAnd) {
                    node->thenExpression = args[0];
                    node->elseExpression = an.makeLiteral(
                        an.rt.falseValue, an.rt.builtins.booleanFalse, mc.position);
                } else {
                    node->thenExpression = an.makeLiteral(an.rt.trueValue,
                                                          an.rt.builtins.booleanTrue,
                                                          mc.position);
                    node->elseExpression = args[0];
                }
                return an.analyze(node, mc.analysis);
            });
        MethodEntry entry;
        entry.selector = rt.intern(selector);
        entry.target = ObjectValue::heap(macro);
        entry.isMacro = true;
        rt.builtins.boolean->macroDictionary[entry.selector] = entry;
    };
    installBooleanMacro("and:", true);
    installBooleanMacro("or:", false);
}

} // namespace sysmel
