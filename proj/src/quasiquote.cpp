#include "sysmel/errors.hpp"
#include "sysmel/runtime.hpp"

namespace sysmel {

AstNode* instantiateTemplate(Runtime& rt, const AstNode* templateNode,
                             std::span<const ObjectValue> holeValues);

namespace {

/// Instantiates one quasi-quote template by deep-cloning it and
/// replacing hole markers with the evaluated hole values.
struct TemplateInstantiator {
    Runtime& rt;
    std::span<const ObjectValue> holes;

    template <typename T>
    T* fresh(const AstNode* original) {
        T* node = rt.make<T>();
        node->type = rt.astNodeClassFor(node->nodeKind);
        node->position = original->position;
        return node;
    }

    const ObjectValue& holeValue(const TemplateHoleNode* hole) {
        if (hole->holeIndex >= holes.size())
            throw EvaluationError("quasi-quote hole index out of range");
        return holes[hole->holeIndex];
    }

    AstNode* valueAsNode(const ObjectValue& value, const AstNode* site) {
        if (auto* node = value.as<AstNode>())
            return clone(node);
        auto* literal = fresh<LiteralNode>(site);
        literal->value = value;
        return literal;
    }

    void appendSpliced(std::vector<AstNode*>& out, const TemplateHoleNode* hole) {
        const ObjectValue& value = holeValue(hole);
        auto* list = value.as<SlotTupleObject>();
        if (!list)
            throw EvaluationError("quasi-quote splice expects a sequence of nodes");
        for (const auto& element : list->slots)
            out.push_back(valueAsNode(element, hole));
    }

    std::vector<AstNode*> cloneList(const std::vector<AstNode*>& nodes) {
        std::vector<AstNode*> result;
        result.reserve(nodes.size());
        for (AstNode* node : nodes) {
            if (node && node->nodeKind == NodeKind::TemplateHole) {
                auto* hole = static_cast<TemplateHoleNode*>(node);
                if (hole->isSplice) {
                    appendSpliced(result, hole);
                    continue;
                }
            }
            result.push_back(clone(node));
        }
        return result;
    }

    AstNode* clone(const AstNode* node) {
        if (!node)
            return nullptr;
        switch (node->nodeKind) {
        case NodeKind::TemplateHole: {
            auto* hole = static_cast<const TemplateHoleNode*>(node);
            if (hole->isSplice)
                throw EvaluationError("quasi-quote splice used outside an argument list");
            return valueAsNode(holeValue(hole), node);
        }
        case NodeKind::Literal: {
            auto* source = static_cast<const LiteralNode*>(node);
            auto* result = fresh<LiteralNode>(node);
            result->value = source->value;
            return result;
        }
        case NodeKind::Identifier: {
            auto* source = static_cast<const IdentifierNode*>(node);
            auto* result = fresh<IdentifierNode>(node);
            result->name = source->name;
            return result;
        }
        case NodeKind::MessageSend: {
            auto* source = static_cast<const MessageSendNode*>(node);
            auto* result = fresh<MessageSendNode>(node);
            result->receiver = clone(source->receiver);
            result->selector = clone(source->selector);
            result->arguments = cloneList(source->arguments);
            return result;
        }
        case NodeKind::FunctionApplication: {
            auto* source = static_cast<const FunctionApplicationNode*>(node);
            auto* result = fresh<FunctionApplicationNode>(node);
            result->functional = clone(source->functional);
            result->arguments = cloneList(source->arguments);
            return result;
        }
        case NodeKind::Cascade: {
            auto* source = static_cast<const CascadeNode*>(node);
            auto* result = fresh<CascadeNode>(node);
            result->receiver = clone(source->receiver);
            for (const auto& message : source->messages)
                result->messages.push_back({clone(message.selector), cloneList(message.arguments)});
            return result;
        }
        case NodeKind::Sequence: {
            auto* source = static_cast<const SequenceNode*>(node);
            auto* result = fresh<SequenceNode>(node);
            result->freshScope = source->freshScope;
            result->expressions = cloneList(source->expressions);
            return result;
        }
        case NodeKind::Lambda: {
            auto* source = static_cast<const LambdaNode*>(node);
            auto* result = fresh<LambdaNode>(node);
            for (const auto& argument : source->argumentNodes)
                result->argumentNodes.push_back({argument.name, clone(argument.typeNode)});
            result->resultTypeNode = clone(source->resultTypeNode);
            result->body = clone(source->body);
            return result;
        }
        case NodeKind::Tuple: {
            auto* source = static_cast<const TupleNode*>(node);
            auto* result = fresh<TupleNode>(node);
            result->elements = cloneList(source->elements);
            return result;
        }
        case NodeKind::MakeDictionary: {
            auto* source = static_cast<const MakeDictionaryNode*>(node);
            auto* result = fresh<MakeDictionaryNode>(node);
            for (const auto& [key, value] : source->pairs)
                result->pairs.emplace_back(clone(key), clone(value));
            return result;
        }
        case NodeKind::MakeByteArray: {
            auto* source = static_cast<const MakeByteArrayNode*>(node);
            auto* result = fresh<MakeByteArrayNode>(node);
            result->elements = cloneList(source->elements);
            return result;
        }
        case NodeKind::LiteralArray: {
            auto* source = static_cast<const LiteralArrayNode*>(node);
            auto* result = fresh<LiteralArrayNode>(node);
            result->elements = cloneList(source->elements);
            return result;
        }
        case NodeKind::Quote: {
            auto* source = static_cast<const QuoteNode*>(node);
            auto* result = fresh<QuoteNode>(node);
            result->inner = clone(source->inner);
            return result;
        }
        case NodeKind::QuasiQuote: {
            auto* source = static_cast<const QuasiQuoteNode*>(node);
            auto* result = fresh<QuasiQuoteNode>(node);
            result->inner = clone(source->inner);
            return result;
        }
        case NodeKind::QuasiUnquote: {
            auto* source = static_cast<const QuasiUnquoteNode*>(node);
            auto* result = fresh<QuasiUnquoteNode>(node);
            result->inner = clone(source->inner);
            return result;
        }
        case NodeKind::Splice: {
            auto* source = static_cast<const SpliceNode*>(node);
            auto* result = fresh<SpliceNode>(node);
            result->inner = clone(source->inner);
            return result;
        }
        default:
            // Analysis-produced node kinds never appear inside parsed
            // quasi-quote templates.
            throw EvaluationError(std::string("cannot instantiate template node kind ") +
                                  nodeKindName(node->nodeKind));
        }
    }
};

} // namespace

AstNode* instantiateTemplate(Runtime& rt, const AstNode* templateNode,
                             std::span<const ObjectValue> holeValues) {
    TemplateInstantiator instantiator{rt, holeValues};
    return instantiator.clone(templateNode);
}

} // namespace sysmel
