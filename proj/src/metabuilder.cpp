#include "sysmel/metabuilder.hpp"

#include "sysmel/errors.hpp"

namespace sysmel {

namespace {
using Kind = SemanticError::Kind;
} // namespace

/// Bridges into the analyzer's private statement driver for class
/// definition blocks.
struct MetabuilderDispatch {
    static ObjectValue evaluateStatement(Analyzer& analyzer, AstNode* node,
                                         AnalysisContext& ctx) {
        return analyzer.evaluateStatement(node, ctx);
    }
};

// --- base protocol ---

AstNode* MetabuilderObject::handleApplication(Analyzer&, AnalysisContext&,
                                              std::span<AstNode* const>,
                                              const SourcePosition& position) {
    throw SemanticError(Kind::MacroError,
                        std::string(builderName()) + " cannot be applied to arguments", position);
}

AstNode* MetabuilderObject::finishStatement(Analyzer&, AnalysisContext&,
                                            const SourcePosition& position) {
    throw SemanticError(Kind::MacroError,
                        std::string(builderName()) + " statement is incomplete", position);
}

const char* MetabuilderObject::builderName() const {
    return type && type->name ? type->name->text.c_str() : "metabuilder";
}

void MetabuilderObject::checkNotFinished(const SourcePosition& position) const {
    if (finished)
        throw SemanticError(Kind::MacroError,
                            std::string(builderName()) + " received a message after completing",
                            position);
}

MetabuilderObject* asMetabuilder(const ObjectValue& value) {
    return value.as<MetabuilderObject>();
}

namespace {

/// Declaration modifiers accumulated before a class/field/method/
/// function builder is spawned.
struct BuilderFlags {
    bool isPublic = false;
    bool isMacro = false;
    bool isPure = false;
    bool isEager = false;
};

AstNode* builderLiteral(Analyzer& analyzer, MetabuilderObject* builder,
                        const SourcePosition& position) {
    return analyzer.makeLiteral(ObjectValue::heap(builder), builder->type, position);
}

struct ParameterSpec {
    SymbolObject* name = nullptr;
    AstNode* typeNode = nullptr; // optional
};

/// Parses `x` or `x: Type` parameter declarations.
ParameterSpec parseParameterSpec(AstNode* node) {
    if (auto* ident = dynamic_cast<IdentifierNode*>(node))
        return {ident->name, nullptr};
    if (auto* send = dynamic_cast<MessageSendNode*>(node);
        send && !send->receiver && send->arguments.size() == 1) {
        if (auto* lit = dynamic_cast<LiteralNode*>(send->selector)) {
            if (auto* selector = lit->value.as<SymbolObject>()) {
                const std::string& text = selector->text;
                if (!text.empty() && text.back() == ':' &&
                    text.find(':') == text.size() - 1) {
                    return {nullptr, send->arguments[0]}; // name filled below
                }
            }
        }
    }
    throw SemanticError(Kind::MacroError,
                        "expected a parameter declaration of the form `name` or `name: Type`",
                        node->position);
}

ParameterSpec parameterSpecOf(Runtime& rt, AstNode* node) {
    ParameterSpec spec = parseParameterSpec(node);
    if (!spec.name) {
        auto* send = static_cast<MessageSendNode*>(node);
        auto* selector =
            static_cast<LiteralNode*>(send->selector)->value.as<SymbolObject>();
        spec.name = rt.intern(selector->text.substr(0, selector->text.size() - 1));
    }
    return spec;
}

FunctionDefinitionObject* makeDefinition(Analyzer& analyzer, AnalysisContext& ctx,
                                         SymbolObject* name,
                                         const std::vector<ParameterSpec>& parameters,
                                         TypeObject* resultType, AstNode* body,
                                         const BuilderFlags& flags, TypeObject* selfType) {
    Runtime& rt = analyzer.rt;
    auto* definition = rt.make<FunctionDefinitionObject>();
    definition->type = rt.builtins.functionDefinition;
    definition->name = name;
    definition->selfType = selfType;
    definition->resultType = resultType;
    definition->bodyNode = body;
    definition->definitionEnvironment = ctx.environment;
    for (const ParameterSpec& spec : parameters) {
        TypeObject* type = spec.typeNode
                               ? analyzer.evaluateTypeExpression(spec.typeNode, ctx)
                               : rt.builtins.dynamic;
        definition->parameters.push_back({spec.name, type, nullptr});
    }
    if (flags.isMacro)
        definition->flags = definition->flags | FunctionFlags::Macro;
    if (flags.isPure)
        definition->flags = definition->flags | FunctionFlags::Pure;
    if (flags.isEager)
        definition->flags = definition->flags | FunctionFlags::CompiledEagerly;
    return definition;
}

// --- let ---

class LetBuilder final : public MetabuilderObject {
public:
    SymbolObject* variableName = nullptr;
    TypeObject* declaredType = nullptr;
    bool isMutable = false;

    AstNode* handleMessage(Analyzer& analyzer, AnalysisContext& ctx, SymbolObject* selector,
                           std::span<AstNode* const> arguments,
                           const SourcePosition& position) override {
        checkNotFinished(position);
        const std::string& text = selector->text;
        if (text == ":=" && arguments.size() == 1) {
            if (!variableName)
                throw SemanticError(Kind::MacroError, "let needs a variable name", position);
            finished = true;
            return analyzer.analyzeLocalDefinition(ctx, variableName, declaredType, arguments[0],
                                                   isMutable, position);
        }
        if (!variableName && arguments.empty()) {
            variableName = selector;
            return builderLiteral(analyzer, this, position);
        }
        if (text == "mutable" && arguments.empty()) {
            isMutable = true;
            return builderLiteral(analyzer, this, position);
        }
        if (text == "type:" && arguments.size() == 1) {
            declaredType = analyzer.evaluateTypeExpression(arguments[0], ctx);
            return builderLiteral(analyzer, this, position);
        }
        throw SemanticError(Kind::MacroError, "unexpected '" + text + "' in a let declaration",
                            position);
    }

    AstNode* finishStatement(Analyzer&, AnalysisContext&,
                             const SourcePosition& position) override {
        throw SemanticError(Kind::MacroError, "let declaration needs `:= value`", position);
    }
};

// --- class / field / method ---

class ClassBuilder final : public MetabuilderObject {
public:
    BuilderFlags flags;
    SymbolObject* className = nullptr;
    TypeObject* superclass = nullptr;
    TypeObject* classType = nullptr;

    AstNode* handleMessage(Analyzer& analyzer, AnalysisContext& ctx, SymbolObject* selector,
                           std::span<AstNode* const> arguments,
                           const SourcePosition& position) override {
        checkNotFinished(position);
        Runtime& rt = analyzer.rt;
        const std::string& text = selector->text;
        if (!className && arguments.empty()) {
            className = selector;
            return builderLiteral(analyzer, this, position);
        }
        if (text == "superclass:" && arguments.size() == 1) {
            superclass = analyzer.evaluateTypeExpression(arguments[0], ctx);
            return builderLiteral(analyzer, this, position);
        }
        if (text == "definition:" && arguments.size() == 1) {
            if (!ctx.evaluating || ctx.currentFunction)
                throw SemanticError(Kind::MacroError,
                                    "class definitions are only allowed at the top level",
                                    position);
            if (!className)
                throw SemanticError(Kind::MacroError, "class definition needs a name", position);
            TypeObject* super = superclass ? superclass : rt.builtins.object;
            classType = rt.makeType(className->text, super, TypeKind::SlotClass);
            classType->slotLayout = super->slotLayout; // inherited slots first
            classType->isPublic = flags.isPublic;

            // The class is visible inside its own definition block.
            ctx.environment->bindValue(className, ObjectValue::heap(classType),
                                       rt.builtins.type);
            auto* entity = rt.make<ClassEntityObject>();
            entity->type = rt.builtins.classEntity;
            entity->name = className;
            entity->classType = classType;
            entity->isPublic = flags.isPublic;
            rt.globalNamespace()->members[className] = ObjectValue::heap(entity);

            AnalysisContext inner = ctx;
            inner.builderContext = this;
            inner.expectedType = nullptr;
            if (auto* block = dynamic_cast<SequenceNode*>(arguments[0])) {
                for (AstNode* statement : block->expressions)
                    MetabuilderDispatch::evaluateStatement(analyzer, statement, inner);
            } else {
                MetabuilderDispatch::evaluateStatement(analyzer, arguments[0], inner);
            }
            finished = true;
            return analyzer.makeLiteral(ObjectValue::heap(classType), rt.builtins.type, position);
        }
        throw SemanticError(Kind::MacroError, "unexpected '" + text + "' in a class declaration",
                            position);
    }

    AstNode* finishStatement(Analyzer&, AnalysisContext&,
                             const SourcePosition& position) override {
        throw SemanticError(Kind::MacroError, "class declaration needs `definition: { ... }`",
                            position);
    }
};

ClassBuilder* enclosingClass(AnalysisContext& ctx, const char* what,
                             const SourcePosition& position) {
    auto* object = dynamic_cast<ClassBuilder*>(ctx.builderContext);
    if (!object || !object->classType)
        throw SemanticError(Kind::MacroError,
                            std::string(what) + " declarations belong inside a class definition",
                            position);
    return object;
}

class FieldBuilder final : public MetabuilderObject {
public:
    BuilderFlags flags;
    SymbolObject* fieldName = nullptr;
    TypeObject* fieldType = nullptr;

    AstNode* handleMessage(Analyzer& analyzer, AnalysisContext& ctx, SymbolObject* selector,
                           std::span<AstNode* const> arguments,
                           const SourcePosition& position) override {
        checkNotFinished(position);
        const std::string& text = selector->text;
        if (!fieldName && arguments.empty()) {
            fieldName = selector;
            return builderLiteral(analyzer, this, position);
        }
        if ((text == "=>" || text == "::=>") && arguments.size() == 1) {
            fieldType = analyzer.evaluateTypeExpression(arguments[0], ctx);
            return finishField(analyzer, ctx, position);
        }
        throw SemanticError(Kind::MacroError, "unexpected '" + text + "' in a field declaration",
                            position);
    }

    AstNode* finishStatement(Analyzer& analyzer, AnalysisContext& ctx,
                             const SourcePosition& position) override {
        // `field name.` declares an untyped (dynamic) slot.
        return finishField(analyzer, ctx, position);
    }

private:
    AstNode* finishField(Analyzer& analyzer, AnalysisContext& ctx,
                         const SourcePosition& position) {
        Runtime& rt = analyzer.rt;
        if (!fieldName)
            throw SemanticError(Kind::MacroError, "field declaration needs a name", position);
        ClassBuilder* owner = enclosingClass(ctx, "field", position);
        TypeObject* cls = owner->classType;
        for (const FieldSlot& slot : cls->slotLayout)
            if (slot.name == fieldName)
                throw SemanticError(Kind::MacroError,
                                    "duplicate field '" + fieldName->text + "' in " +
                                        cls->name->text,
                                    position);
        TypeObject* type = fieldType ? fieldType : rt.builtins.dynamic;
        uint32_t index = uint32_t(cls->slotLayout.size());
        cls->slotLayout.push_back({fieldName, type, index, flags.isPublic});

        installAccessors(analyzer, cls, type, index, position);
        finished = true;
        return builderLiteral(analyzer, this, position);
    }

    void installAccessors(Analyzer& analyzer, TypeObject* cls, TypeObject* type, uint32_t index,
                          const SourcePosition& position) {
        Runtime& rt = analyzer.rt;
        auto makeSelf = [&] {
            auto* self = analyzer.makeNode<ArgumentReferenceNode>(position);
            self->name = rt.intern("self");
            self->index = 0;
            self->analyzedType = cls;
            return self;
        };
        auto makeSlotRef = [&] {
            return analyzer.makeIntrinsicApplication(
                "slotRef",
                {makeSelf(), analyzer.makeLiteral(rt.makeInteger(index), rt.builtins.integer,
                                                  position)},
                rt.makeReferenceType(type), position);
        };

        auto* getter = rt.make<FunctionDefinitionObject>();
        getter->type = rt.builtins.functionDefinition;
        getter->name = fieldName;
        getter->selfType = cls;
        getter->resultType = type;
        getter->definitionEnvironment = rt.globalEnvironment();
        getter->analyzedBody =
            analyzer.makeIntrinsicApplication("refLoad", {makeSlotRef()}, type, position);
        getter->bodyNode = getter->analyzedBody;

        auto* setter = rt.make<FunctionDefinitionObject>();
        setter->type = rt.builtins.functionDefinition;
        SymbolObject* setterSelector = rt.intern(fieldName->text + ":");
        setter->name = setterSelector;
        setter->selfType = cls;
        setter->resultType = type;
        setter->parameters.push_back({rt.intern("value"), type, nullptr});
        setter->definitionEnvironment = rt.globalEnvironment();
        auto* value = analyzer.makeNode<ArgumentReferenceNode>(position);
        value->name = rt.intern("value");
        value->index = 1;
        value->analyzedType = type;
        setter->analyzedBody = analyzer.makeIntrinsicApplication(
            "refStore", {makeSlotRef(), value}, type, position);
        setter->bodyNode = setter->analyzedBody;

        MethodEntry getterEntry;
        getterEntry.selector = fieldName;
        getterEntry.target = ObjectValue::heap(getter);
        getterEntry.staticDispatch = false;
        cls->methodDictionary[fieldName] = getterEntry;

        MethodEntry setterEntry;
        setterEntry.selector = setterSelector;
        setterEntry.target = ObjectValue::heap(setter);
        setterEntry.staticDispatch = false;
        cls->methodDictionary[setterSelector] = setterEntry;
    }
};

class MethodBuilder final : public MetabuilderObject {
public:
    BuilderFlags flags;
    SymbolObject* methodSelector = nullptr;
    std::vector<ParameterSpec> parameters;
    TypeObject* resultType = nullptr;

    AstNode* handleMessage(Analyzer& analyzer, AnalysisContext& ctx, SymbolObject* selector,
                           std::span<AstNode* const> arguments,
                           const SourcePosition& position) override {
        checkNotFinished(position);
        Runtime& rt = analyzer.rt;
        const std::string& text = selector->text;
        if (text == ":=" && arguments.size() == 1) {
            if (!methodSelector)
                throw SemanticError(Kind::MacroError, "method declaration needs a selector",
                                    position);
            ClassBuilder* owner = enclosingClass(ctx, "method", position);
            TypeObject* cls = owner->classType;
            FunctionDefinitionObject* definition = makeDefinition(
                analyzer, ctx, methodSelector, parameters, resultType, arguments[0], flags, cls);
            MethodEntry entry;
            entry.selector = methodSelector;
            entry.target = ObjectValue::heap(definition);
            entry.isMacro = flags.isMacro;
            entry.staticDispatch = cls->isFinal;
            entry.pure = flags.isPure;
            if (flags.isMacro)
                cls->macroDictionary[methodSelector] = entry;
            else
                cls->methodDictionary[methodSelector] = entry;
            if (flags.isEager)
                analyzer.ensureAnalyzed(definition);
            finished = true;
            return analyzer.makeLiteral(ObjectValue::heap(definition),
                                        rt.builtins.functionDefinition, position);
        }
        if ((text == "=>" || text == "::=>") && arguments.size() == 1) {
            if (!methodSelector)
                throw SemanticError(Kind::MacroError,
                                    "method declaration needs a selector before its result type",
                                    position);
            resultType = analyzer.evaluateTypeExpression(arguments[0], ctx);
            return builderLiteral(analyzer, this, position);
        }
        if (!methodSelector && !text.empty() && text.back() == ':') {
            methodSelector = selector;
            for (AstNode* arg : arguments)
                parameters.push_back(parameterSpecOf(rt, arg));
            return builderLiteral(analyzer, this, position);
        }
        if (!methodSelector && arguments.empty()) {
            methodSelector = selector; // unary method
            return builderLiteral(analyzer, this, position);
        }
        throw SemanticError(Kind::MacroError, "unexpected '" + text + "' in a method declaration",
                            position);
    }

    AstNode* finishStatement(Analyzer&, AnalysisContext&,
                             const SourcePosition& position) override {
        throw SemanticError(Kind::MacroError, "method declaration needs `:= body`", position);
    }
};

// --- function ---

class FunctionBuilder final : public MetabuilderObject {
public:
    BuilderFlags flags;
    SymbolObject* functionName = nullptr;
    bool parametersSeen = false;
    std::vector<ParameterSpec> parameters;
    TypeObject* resultType = nullptr;

    AstNode* handleMessage(Analyzer& analyzer, AnalysisContext& ctx, SymbolObject* selector,
                           std::span<AstNode* const> arguments,
                           const SourcePosition& position) override {
        checkNotFinished(position);
        Runtime& rt = analyzer.rt;
        const std::string& text = selector->text;
        if (text == ":=" && arguments.size() == 1) {
            if (!ctx.evaluating || ctx.currentFunction)
                throw SemanticError(Kind::MacroError,
                                    "function definitions are only allowed at the top level",
                                    position);
            if (!functionName)
                throw SemanticError(Kind::MacroError, "function declaration needs a name",
                                    position);
            FunctionDefinitionObject* definition =
                makeDefinition(analyzer, ctx, functionName, parameters, resultType, arguments[0],
                               flags, nullptr);
            if (flags.isMacro) {
                Binding binding;
                binding.value = ObjectValue::heap(definition);
                binding.valueType = rt.builtins.functionDefinition;
                binding.kind = BindingKind::Macro;
                ctx.environment->bind(functionName, binding);
            } else {
                ctx.environment->bindValue(functionName, ObjectValue::heap(definition),
                                           rt.builtins.functionDefinition);
            }
            auto* entity = rt.make<FunctionEntityObject>();
            entity->type = rt.builtins.functionEntity;
            entity->name = functionName;
            entity->definition = definition;
            entity->isPublic = flags.isPublic;
            entity->isMacro = flags.isMacro;
            rt.globalNamespace()->members[functionName] = ObjectValue::heap(entity);
            if (flags.isEager)
                analyzer.ensureAnalyzed(definition);
            finished = true;
            return analyzer.makeLiteral(ObjectValue::heap(definition),
                                        rt.builtins.functionDefinition, position);
        }
        if ((text == "=>" || text == "::=>") && arguments.size() == 1) {
            resultType = analyzer.evaluateTypeExpression(arguments[0], ctx);
            return builderLiteral(analyzer, this, position);
        }
        if (!functionName && arguments.empty()) {
            functionName = selector;
            return builderLiteral(analyzer, this, position);
        }
        throw SemanticError(Kind::MacroError,
                            "unexpected '" + text + "' in a function declaration", position);
    }

    AstNode* handleApplication(Analyzer& analyzer, AnalysisContext&,
                               std::span<AstNode* const> arguments,
                               const SourcePosition& position) override {
        checkNotFinished(position);
        if (!functionName)
            throw SemanticError(Kind::MacroError,
                                "function parameters come after the function name", position);
        if (parametersSeen)
            throw SemanticError(Kind::MacroError, "duplicate function parameter list", position);
        parametersSeen = true;
        for (AstNode* arg : arguments)
            parameters.push_back(parameterSpecOf(analyzer.rt, arg));
        return builderLiteral(analyzer, this, position);
    }

    AstNode* finishStatement(Analyzer&, AnalysisContext&,
                             const SourcePosition& position) override {
        throw SemanticError(Kind::MacroError, "function declaration needs `:= body`", position);
    }
};

// --- modifiers ---

class ModifierBuilder final : public MetabuilderObject {
public:
    BuilderFlags flags;
    TypeObject* letType = nullptr;
    TypeObject* classTypeObject = nullptr;
    TypeObject* fieldTypeObject = nullptr;
    TypeObject* methodTypeObject = nullptr;
    TypeObject* functionTypeObject = nullptr;

    AstNode* handleMessage(Analyzer& analyzer, AnalysisContext&, SymbolObject* selector,
                           std::span<AstNode* const> arguments,
                           const SourcePosition& position) override {
        checkNotFinished(position);
        const std::string& text = selector->text;
        if (!arguments.empty())
            throw SemanticError(Kind::MacroError,
                                "unexpected '" + text + "' after declaration modifiers",
                                position);
        if (text == "public") {
            flags.isPublic = true;
        } else if (text == "macro") {
            flags.isMacro = true;
        } else if (text == "pure") {
            flags.isPure = true;
        } else if (text == "eager") {
            flags.isEager = true;
        } else if (text == "class") {
            return spawn<ClassBuilder>(analyzer, classTypeObject, position);
        } else if (text == "field") {
            return spawn<FieldBuilder>(analyzer, fieldTypeObject, position);
        } else if (text == "method") {
            return spawn<MethodBuilder>(analyzer, methodTypeObject, position);
        } else if (text == "function") {
            return spawn<FunctionBuilder>(analyzer, functionTypeObject, position);
        } else {
            throw SemanticError(Kind::MacroError,
                                "unknown declaration modifier '" + text + "'", position);
        }
        return builderLiteral(analyzer, this, position);
    }

    AstNode* finishStatement(Analyzer&, AnalysisContext&,
                             const SourcePosition& position) override {
        throw SemanticError(Kind::MacroError, "dangling declaration modifier", position);
    }

private:
    template <typename T>
    AstNode* spawn(Analyzer& analyzer, TypeObject* builderType, const SourcePosition& position) {
        T* builder = analyzer.rt.make<T>();
        builder->type = builderType;
        builder->flags = flags;
        finished = true;
        return builderLiteral(analyzer, builder, position);
    }
};

/// Macro-factory binding payload: spawns a fresh builder per use.
class BuilderFactoryObject final : public Object {
public:
    SymbolObject* name = nullptr;
    std::function<MetabuilderObject*(Runtime&)> spawn;

    ObjectKind objectKind() const override { return ObjectKind::SlotTuple; }
    size_t payloadSize() const override { return 0; }
};

} // namespace

ObjectValue spawnBuilderFactory(Runtime& rt, const Binding& binding) {
    auto* factory = binding.value.as<BuilderFactoryObject>();
    if (!factory)
        throw EvaluationError("invalid metabuilder factory binding");
    return ObjectValue::heap(factory->spawn(rt));
}

void installMetabuilderFactories(Runtime& rt) {
    auto makeBuilderType = [&](const char* name) {
        TypeObject* type = rt.makeType(name, rt.builtins.metabuilder, TypeKind::SlotClass);
        type->delegatesSendsToInstance = true;
        return type;
    };
    TypeObject* letType = makeBuilderType("LetBuilder");
    TypeObject* modifierType = makeBuilderType("DeclarationModifierBuilder");
    TypeObject* classType = makeBuilderType("ClassBuilder");
    TypeObject* fieldType = makeBuilderType("FieldBuilder");
    TypeObject* methodType = makeBuilderType("MethodBuilder");
    TypeObject* functionType = makeBuilderType("FunctionBuilder");

    EnvironmentObject* global = rt.globalEnvironment();
    auto installFactory = [&](const char* name,
                              std::function<MetabuilderObject*(Runtime&)> spawn) {
        auto* factory = rt.make<BuilderFactoryObject>();
        factory->type = rt.builtins.metabuilder;
        factory->name = rt.intern(name);
        factory->spawn = std::move(spawn);
        Binding binding;
        binding.value = ObjectValue::heap(factory);
        binding.valueType = rt.builtins.metabuilder;
        binding.kind = BindingKind::MacroFactory;
        global->bind(factory->name, binding);
        rt.registerBuiltin(std::string("factory:") + name, ObjectValue::heap(factory));
    };

    installFactory("let", [letType](Runtime& runtime) -> MetabuilderObject* {
        auto* builder = runtime.make<LetBuilder>();
        builder->type = letType;
        return builder;
    });

    auto makeModifier = [=](Runtime& runtime, BuilderFlags flags) -> MetabuilderObject* {
        auto* builder = runtime.make<ModifierBuilder>();
        builder->type = modifierType;
        builder->flags = flags;
        builder->classTypeObject = classType;
        builder->fieldTypeObject = fieldType;
        builder->methodTypeObject = methodType;
        builder->functionTypeObject = functionType;
        return builder;
    };
    installFactory("public", [makeModifier](Runtime& runtime) {
        BuilderFlags flags;
        flags.isPublic = true;
        return makeModifier(runtime, flags);
    });
    installFactory("macro", [makeModifier](Runtime& runtime) {
        BuilderFlags flags;
        flags.isMacro = true;
        return makeModifier(runtime, flags);
    });
    installFactory("pure", [makeModifier](Runtime& runtime) {
        BuilderFlags flags;
        flags.isPure = true;
        return makeModifier(runtime, flags);
    });
    installFactory("eager", [makeModifier](Runtime& runtime) {
        BuilderFlags flags;
        flags.isEager = true;
        return makeModifier(runtime, flags);
    });

    installFactory("class", [classType](Runtime& runtime) -> MetabuilderObject* {
        auto* builder = runtime.make<ClassBuilder>();
        builder->type = classType;
        return builder;
    });
    installFactory("field", [fieldType](Runtime& runtime) -> MetabuilderObject* {
        auto* builder = runtime.make<FieldBuilder>();
        builder->type = fieldType;
        return builder;
    });
    installFactory("method", [methodType](Runtime& runtime) -> MetabuilderObject* {
        auto* builder = runtime.make<MethodBuilder>();
        builder->type = methodType;
        return builder;
    });
    installFactory("function", [functionType](Runtime& runtime) -> MetabuilderObject* {
        auto* builder = runtime.make<FunctionBuilder>();
        builder->type = functionType;
        return builder;
    });
}

} // namespace sysmel
