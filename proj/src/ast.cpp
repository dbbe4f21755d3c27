#include "sysmel/ast.hpp"
#include "sysmel/function.hpp"
#include "sysmel/type.hpp"

#include <sstream>

namespace sysmel {

const char* nodeKindName(NodeKind kind) {
    switch (kind) {
    case NodeKind::Literal: return "Literal";
    case NodeKind::Identifier: return "Identifier";
    case NodeKind::MessageSend: return "MessageSend";
    case NodeKind::FunctionApplication: return "FunctionApplication";
    case NodeKind::Cascade: return "Cascade";
    case NodeKind::Sequence: return "Sequence";
    case NodeKind::Lambda: return "Lambda";
    case NodeKind::Tuple: return "Tuple";
    case NodeKind::MakeDictionary: return "MakeDictionary";
    case NodeKind::MakeByteArray: return "MakeByteArray";
    case NodeKind::LiteralArray: return "LiteralArray";
    case NodeKind::Quote: return "Quote";
    case NodeKind::QuasiQuote: return "QuasiQuote";
    case NodeKind::QuasiUnquote: return "QuasiUnquote";
    case NodeKind::Splice: return "Splice";
    case NodeKind::ArgumentReference: return "ArgumentReference";
    case NodeKind::CaptureReference: return "CaptureReference";
    case NodeKind::LocalReference: return "LocalReference";
    case NodeKind::LocalDefinition: return "LocalDefinition";
    case NodeKind::MakeClosure: return "MakeClosure";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::BuildNode: return "BuildNode";
    case NodeKind::TemplateHole: return "TemplateHole";
    }
    return "?";
}

namespace {

bool typeObjectsEqual(const TypeObject* a, const TypeObject* b) {
    if (a == b)
        return true;
    if (!a || !b)
        return false;
    if (!a->name || !b->name)
        return false;
    return a->typeKind == b->typeKind && a->name->text == b->name->text;
}

bool nodeListsEqual(const std::vector<AstNode*>& a, const std::vector<AstNode*>& b) {
    if (a.size() != b.size())
        return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!structurallyEqual(a[i], b[i]))
            return false;
    return true;
}

} // namespace

bool structurallyEqualValues(const ObjectValue& a, const ObjectValue& b) {
    if (a.kind() != b.kind())
        return false;
    if (!a.isHeap())
        return a == b;
    Object* oa = a.object();
    Object* ob = b.object();
    if (oa == ob)
        return true;
    if (!oa || !ob)
        return false;
    if (auto* sa = dynamic_cast<SymbolObject*>(oa)) {
        auto* sb = dynamic_cast<SymbolObject*>(ob);
        return sb && sa->text == sb->text;
    }
    if (auto* ia = dynamic_cast<BigIntObject*>(oa)) {
        auto* ib = dynamic_cast<BigIntObject*>(ob);
        return ib && ia->value == ib->value;
    }
    if (auto* na = dynamic_cast<AstNode*>(oa)) {
        auto* nb = dynamic_cast<AstNode*>(ob);
        return nb && structurallyEqual(na, nb);
    }
    if (auto* ta = dynamic_cast<TypeObject*>(oa)) {
        auto* tb = dynamic_cast<TypeObject*>(ob);
        if (!tb)
            return false;
        if ((ta->typeKind == TypeKind::ReferenceTo || ta->typeKind == TypeKind::PointerTo) &&
            ta->typeKind == tb->typeKind)
            return typeObjectsEqual(ta->baseType, tb->baseType);
        return typeObjectsEqual(ta, tb);
    }
    if (auto* ba = dynamic_cast<ByteTupleObject*>(oa)) {
        auto* bb = dynamic_cast<ByteTupleObject*>(ob);
        return bb && typeObjectsEqual(ba->type, bb->type) && ba->bytes == bb->bytes;
    }
    if (auto* sta = dynamic_cast<SlotTupleObject*>(oa)) {
        auto* stb = dynamic_cast<SlotTupleObject*>(ob);
        if (!stb || !typeObjectsEqual(sta->type, stb->type) || sta->slots.size() != stb->slots.size())
            return false;
        for (size_t i = 0; i < sta->slots.size(); ++i)
            if (!structurallyEqualValues(sta->slots[i], stb->slots[i]))
                return false;
        return true;
    }
    // Definitions, closures and other native objects: identity.
    return false;
}

bool structurallyEqual(const AstNode* a, const AstNode* b) {
    if (a == b)
        return true;
    if (!a || !b || a->nodeKind != b->nodeKind)
        return false;
    switch (a->nodeKind) {
    case NodeKind::Literal: {
        auto* la = static_cast<const LiteralNode*>(a);
        auto* lb = static_cast<const LiteralNode*>(b);
        return structurallyEqualValues(la->value, lb->value);
    }
    case NodeKind::Identifier: {
        auto* ia = static_cast<const IdentifierNode*>(a);
        auto* ib = static_cast<const IdentifierNode*>(b);
        return ia->name->text == ib->name->text;
    }
    case NodeKind::MessageSend: {
        auto* ma = static_cast<const MessageSendNode*>(a);
        auto* mb = static_cast<const MessageSendNode*>(b);
        if ((ma->receiver == nullptr) != (mb->receiver == nullptr))
            return false;
        if (ma->receiver && !structurallyEqual(ma->receiver, mb->receiver))
            return false;
        return structurallyEqual(ma->selector, mb->selector) &&
               nodeListsEqual(ma->arguments, mb->arguments);
    }
    case NodeKind::FunctionApplication: {
        auto* fa = static_cast<const FunctionApplicationNode*>(a);
        auto* fb = static_cast<const FunctionApplicationNode*>(b);
        return structurallyEqual(fa->functional, fb->functional) &&
               nodeListsEqual(fa->arguments, fb->arguments);
    }
    case NodeKind::Cascade: {
        auto* ca = static_cast<const CascadeNode*>(a);
        auto* cb = static_cast<const CascadeNode*>(b);
        if (!structurallyEqual(ca->receiver, cb->receiver) || ca->messages.size() != cb->messages.size())
            return false;
        for (size_t i = 0; i < ca->messages.size(); ++i) {
            if (!structurallyEqual(ca->messages[i].selector, cb->messages[i].selector) ||
                !nodeListsEqual(ca->messages[i].arguments, cb->messages[i].arguments))
                return false;
        }
        return true;
    }
    case NodeKind::Sequence: {
        auto* sa = static_cast<const SequenceNode*>(a);
        auto* sb = static_cast<const SequenceNode*>(b);
        return sa->freshScope == sb->freshScope && nodeListsEqual(sa->expressions, sb->expressions);
    }
    case NodeKind::Lambda: {
        auto* la = static_cast<const LambdaNode*>(a);
        auto* lb = static_cast<const LambdaNode*>(b);
        if (la->argumentNodes.size() != lb->argumentNodes.size())
            return false;
        for (size_t i = 0; i < la->argumentNodes.size(); ++i) {
            if (la->argumentNodes[i].name->text != lb->argumentNodes[i].name->text)
                return false;
            if ((la->argumentNodes[i].typeNode == nullptr) != (lb->argumentNodes[i].typeNode == nullptr))
                return false;
            if (la->argumentNodes[i].typeNode &&
                !structurallyEqual(la->argumentNodes[i].typeNode, lb->argumentNodes[i].typeNode))
                return false;
        }
        if ((la->resultTypeNode == nullptr) != (lb->resultTypeNode == nullptr))
            return false;
        if (la->resultTypeNode && !structurallyEqual(la->resultTypeNode, lb->resultTypeNode))
            return false;
        return structurallyEqual(la->body, lb->body);
    }
    case NodeKind::Tuple:
        return nodeListsEqual(static_cast<const TupleNode*>(a)->elements,
                              static_cast<const TupleNode*>(b)->elements);
    case NodeKind::MakeDictionary: {
        auto* da = static_cast<const MakeDictionaryNode*>(a);
        auto* db = static_cast<const MakeDictionaryNode*>(b);
        if (da->pairs.size() != db->pairs.size())
            return false;
        for (size_t i = 0; i < da->pairs.size(); ++i)
            if (!structurallyEqual(da->pairs[i].first, db->pairs[i].first) ||
                !structurallyEqual(da->pairs[i].second, db->pairs[i].second))
                return false;
        return true;
    }
    case NodeKind::MakeByteArray:
        return nodeListsEqual(static_cast<const MakeByteArrayNode*>(a)->elements,
                              static_cast<const MakeByteArrayNode*>(b)->elements);
    case NodeKind::LiteralArray:
        return nodeListsEqual(static_cast<const LiteralArrayNode*>(a)->elements,
                              static_cast<const LiteralArrayNode*>(b)->elements);
    case NodeKind::Quote:
        return structurallyEqual(static_cast<const QuoteNode*>(a)->inner,
                                 static_cast<const QuoteNode*>(b)->inner);
    case NodeKind::QuasiQuote:
        return structurallyEqual(static_cast<const QuasiQuoteNode*>(a)->inner,
                                 static_cast<const QuasiQuoteNode*>(b)->inner);
    case NodeKind::QuasiUnquote:
        return structurallyEqual(static_cast<const QuasiUnquoteNode*>(a)->inner,
                                 static_cast<const QuasiUnquoteNode*>(b)->inner);
    case NodeKind::Splice:
        return structurallyEqual(static_cast<const SpliceNode*>(a)->inner,
                                 static_cast<const SpliceNode*>(b)->inner);
    case NodeKind::ArgumentReference: {
        auto* ra = static_cast<const ArgumentReferenceNode*>(a);
        auto* rb = static_cast<const ArgumentReferenceNode*>(b);
        return ra->index == rb->index;
    }
    case NodeKind::CaptureReference: {
        auto* ra = static_cast<const CaptureReferenceNode*>(a);
        auto* rb = static_cast<const CaptureReferenceNode*>(b);
        return ra->index == rb->index;
    }
    case NodeKind::LocalReference: {
        auto* ra = static_cast<const LocalReferenceNode*>(a);
        auto* rb = static_cast<const LocalReferenceNode*>(b);
        return ra->index == rb->index && ra->isMutableCell == rb->isMutableCell;
    }
    case NodeKind::LocalDefinition: {
        auto* ra = static_cast<const LocalDefinitionNode*>(a);
        auto* rb = static_cast<const LocalDefinitionNode*>(b);
        return ra->index == rb->index && ra->isMutableCell == rb->isMutableCell &&
               structurallyEqual(ra->initialValue, rb->initialValue);
    }
    case NodeKind::MakeClosure: {
        auto* ca = static_cast<const MakeClosureNode*>(a);
        auto* cb = static_cast<const MakeClosureNode*>(b);
        return ca->definition == cb->definition && nodeListsEqual(ca->captureSources, cb->captureSources);
    }
    case NodeKind::If: {
        auto* ia = static_cast<const IfNode*>(a);
        auto* ib = static_cast<const IfNode*>(b);
        if ((ia->elseExpression == nullptr) != (ib->elseExpression == nullptr))
            return false;
        return structurallyEqual(ia->condition, ib->condition) &&
               structurallyEqual(ia->thenExpression, ib->thenExpression) &&
               (!ia->elseExpression || structurallyEqual(ia->elseExpression, ib->elseExpression));
    }
    case NodeKind::While: {
        auto* wa = static_cast<const WhileNode*>(a);
        auto* wb = static_cast<const WhileNode*>(b);
        return structurallyEqual(wa->condition, wb->condition) && structurallyEqual(wa->body, wb->body);
    }
    case NodeKind::BuildNode: {
        auto* ba = static_cast<const BuildNodeNode*>(a);
        auto* bb = static_cast<const BuildNodeNode*>(b);
        return structurallyEqual(ba->templateNode, bb->templateNode) &&
               nodeListsEqual(ba->holeExpressions, bb->holeExpressions);
    }
    case NodeKind::TemplateHole: {
        auto* ha = static_cast<const TemplateHoleNode*>(a);
        auto* hb = static_cast<const TemplateHoleNode*>(b);
        return ha->holeIndex == hb->holeIndex && ha->isSplice == hb->isSplice;
    }
    }
    return false;
}

namespace {

std::string describeValueShort(const ObjectValue& v) {
    if (v.isSmallInt())
        return std::to_string(v.smallIntValue());
    if (v.isChar())
        return std::string("$") + char(v.charValue());
    Object* o = v.object();
    if (!o)
        return "nil";
    if (auto* s = dynamic_cast<SymbolObject*>(o))
        return "#" + s->text;
    if (auto* i = dynamic_cast<BigIntObject*>(o))
        return i->value.str();
    if (auto* t = dynamic_cast<TypeObject*>(o))
        return t->name ? t->name->text : "a Type";
    if (auto* b = dynamic_cast<ByteTupleObject*>(o)) {
        if (b->type && b->type->name && b->type->name->text == "String")
            return "\"" + b->asString() + "\"";
        return "bytes[" + std::to_string(b->bytes.size()) + "]";
    }
    if (auto* n = dynamic_cast<AstNode*>(o))
        return std::string("node:") + nodeKindName(n->nodeKind);
    return "an Object";
}

void dumpInto(const AstNode* node, int depth, std::ostringstream& out) {
    for (int i = 0; i < depth; ++i)
        out << "  ";
    if (!node) {
        out << "(none)\n";
        return;
    }
    out << nodeKindName(node->nodeKind) << " @" << node->position.line << ":" << node->position.column;
    switch (node->nodeKind) {
    case NodeKind::Literal:
        out << " [" << describeValueShort(static_cast<const LiteralNode*>(node)->value) << "]";
        break;
    case NodeKind::Identifier:
        out << " [" << static_cast<const IdentifierNode*>(node)->name->text << "]";
        break;
    case NodeKind::ArgumentReference:
        out << " [" << static_cast<const ArgumentReferenceNode*>(node)->index << "]";
        break;
    case NodeKind::CaptureReference:
        out << " [" << static_cast<const CaptureReferenceNode*>(node)->index << "]";
        break;
    case NodeKind::LocalReference:
        out << " [" << static_cast<const LocalReferenceNode*>(node)->index << "]";
        break;
    default:
        break;
    }
    out << "\n";
    auto child = [&](const AstNode* c) { dumpInto(c, depth + 1, out); };
    switch (node->nodeKind) {
    case NodeKind::MessageSend: {
        auto* m = static_cast<const MessageSendNode*>(node);
        if (m->receiver)
            child(m->receiver);
        child(m->selector);
        for (auto* a : m->arguments)
            child(a);
        break;
    }
    case NodeKind::FunctionApplication: {
        auto* f = static_cast<const FunctionApplicationNode*>(node);
        child(f->functional);
        for (auto* a : f->arguments)
            child(a);
        break;
    }
    case NodeKind::Cascade: {
        auto* c = static_cast<const CascadeNode*>(node);
        child(c->receiver);
        for (const auto& m : c->messages) {
            child(m.selector);
            for (auto* a : m.arguments)
                child(a);
        }
        break;
    }
    case NodeKind::Sequence:
        for (auto* e : static_cast<const SequenceNode*>(node)->expressions)
            child(e);
        break;
    case NodeKind::Lambda: {
        auto* l = static_cast<const LambdaNode*>(node);
        for (const auto& a : l->argumentNodes)
            if (a.typeNode)
                child(a.typeNode);
        if (l->resultTypeNode)
            child(l->resultTypeNode);
        child(l->body);
        break;
    }
    case NodeKind::Tuple:
        for (auto* e : static_cast<const TupleNode*>(node)->elements)
            child(e);
        break;
    case NodeKind::MakeDictionary:
        for (const auto& p : static_cast<const MakeDictionaryNode*>(node)->pairs) {
            child(p.first);
            child(p.second);
        }
        break;
    case NodeKind::MakeByteArray:
        for (auto* e : static_cast<const MakeByteArrayNode*>(node)->elements)
            child(e);
        break;
    case NodeKind::LiteralArray:
        for (auto* e : static_cast<const LiteralArrayNode*>(node)->elements)
            child(e);
        break;
    case NodeKind::Quote:
        child(static_cast<const QuoteNode*>(node)->inner);
        break;
    case NodeKind::QuasiQuote:
        child(static_cast<const QuasiQuoteNode*>(node)->inner);
        break;
    case NodeKind::QuasiUnquote:
        child(static_cast<const QuasiUnquoteNode*>(node)->inner);
        break;
    case NodeKind::Splice:
        child(static_cast<const SpliceNode*>(node)->inner);
        break;
    case NodeKind::LocalDefinition:
        child(static_cast<const LocalDefinitionNode*>(node)->initialValue);
        break;
    case NodeKind::MakeClosure:
        for (auto* c : static_cast<const MakeClosureNode*>(node)->captureSources)
            child(c);
        break;
    case NodeKind::If: {
        auto* i = static_cast<const IfNode*>(node);
        child(i->condition);
        child(i->thenExpression);
        if (i->elseExpression)
            child(i->elseExpression);
        break;
    }
    case NodeKind::While: {
        auto* w = static_cast<const WhileNode*>(node);
        child(w->condition);
        child(w->body);
        break;
    }
    case NodeKind::BuildNode: {
        auto* b = static_cast<const BuildNodeNode*>(node);
        child(b->templateNode);
        for (auto* h : b->holeExpressions)
            child(h);
        break;
    }
    default:
        break;
    }
}

} // namespace

std::string dumpAst(const AstNode* node) {
    std::ostringstream out;
    dumpInto(node, 0, out);
    return out.str();
}

} // namespace sysmel
