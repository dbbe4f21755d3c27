#include "sysmel/ast.hpp"
#include "sysmel/function.hpp"
#include "sysmel/parser.hpp"
#include "sysmel/primitive_encoding.hpp"
#include "sysmel/type.hpp"

#include <cctype>
#include <iomanip>
#include <sstream>

namespace sysmel {

namespace {

bool isOperatorSelector(const std::string& text) {
    if (text.empty() || text == ":=")
        return false;
    for (char c : text)
        if (std::isalnum((unsigned char)c) || c == '_' || c == ':')
            return false;
    return true;
}

bool isLowPrecedenceSelector(const std::string& text) {
    return text.size() > 2 && text[0] == ':' && text[1] == ':' &&
           !std::isalnum((unsigned char)text[2]) && text[2] != '_';
}

bool isKeywordSelector(const std::string& text) {
    return !text.empty() && text.back() == ':';
}

std::string escapeStringBody(const std::string& text, char quote) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        case '\\': out += "\\\\"; break;
        case '\0': out += "\\0"; break;
        default:
            if (c == quote) {
                out.push_back('\\');
                out.push_back(c);
            } else {
                out.push_back(c);
            }
        }
    }
    return out;
}

const char* primitiveSuffixFor(const TypeObject* type) {
    if (!type || !type->name)
        return "";
    const std::string& n = type->name->text;
    if (n == "Int8") return "i8";
    if (n == "Int16") return "i16";
    if (n == "Int32") return "i32";
    if (n == "Int64") return "i64";
    if (n == "UInt8") return "u8";
    if (n == "UInt16") return "u16";
    if (n == "UInt32") return "u32";
    if (n == "UInt64") return "u64";
    if (n == "Size") return "sz";
    if (n == "Float32") return "f32";
    if (n == "Float64") return "";
    return "";
}

std::string formatFloat(double value) {
    std::ostringstream out;
    out << std::setprecision(17) << value;
    std::string text = out.str();
    if (text.find('.') == std::string::npos && text.find('e') == std::string::npos &&
        text.find("inf") == std::string::npos && text.find("nan") == std::string::npos)
        text += ".0";
    return text;
}

struct Unparser {
    std::ostringstream out;

    void emitValue(const ObjectValue& value) {
        if (value.isSmallInt()) {
            out << value.smallIntValue();
            return;
        }
        if (value.isChar()) {
            std::string body(1, char(value.charValue()));
            out << "'" << escapeStringBody(body, '\'') << "'";
            return;
        }
        Object* o = value.object();
        if (!o) {
            out << "nil";
            return;
        }
        if (auto* big = dynamic_cast<BigIntObject*>(o)) {
            out << big->value.str();
            return;
        }
        if (auto* sym = dynamic_cast<SymbolObject*>(o)) {
            out << "#" << sym->text;
            return;
        }
        if (auto* type = dynamic_cast<TypeObject*>(o)) {
            if (type->typeKind == TypeKind::ReferenceTo && type->baseType && type->baseType->name) {
                out << "(" << type->baseType->name->text << " ref)";
                return;
            }
            if (type->typeKind == TypeKind::PointerTo && type->baseType && type->baseType->name) {
                out << "(" << type->baseType->name->text << " pointer)";
                return;
            }
            out << (type->name ? type->name->text : "Type");
            return;
        }
        if (auto* bytes = dynamic_cast<ByteTupleObject*>(o)) {
            TypeObject* t = bytes->type;
            if (t && t->typeKind == TypeKind::PrimitiveInteger) {
                BigInt v = decodeIntegerLE(bytes->bytes, t->isSigned);
                out << v.str() << primitiveSuffixFor(t);
                return;
            }
            if (t && t->typeKind == TypeKind::PrimitiveFloat) {
                out << formatFloat(decodeFloatLE(bytes->bytes)) << primitiveSuffixFor(t);
                return;
            }
            out << "\"" << escapeStringBody(bytes->asString(), '"') << "\"";
            return;
        }
        if (auto* node = dynamic_cast<AstNode*>(o)) {
            out << "`'";
            emitPrimary(node);
            return;
        }
        if (auto* tuple = dynamic_cast<SlotTupleObject*>(o)) {
            if (tuple->type && tuple->type->typeKind == TypeKind::Singleton) {
                out << (tuple->type->name ? tuple->type->name->text : "nil");
                return;
            }
        }
        out << "nil";
    }

    void emitSelectorAndArguments(AstNode* selector, const std::vector<AstNode*>& arguments) {
        std::string text;
        if (auto* lit = dynamic_cast<LiteralNode*>(selector))
            if (auto* sym = lit->value.as<SymbolObject>())
                text = sym->text;
        if (text.empty()) {
            // Unquoted or computed selector.
            if (selector->nodeKind == NodeKind::QuasiUnquote) {
                out << "`,";
                emitPrimary(static_cast<QuasiUnquoteNode*>(selector)->inner);
            } else {
                emitPrimary(selector);
            }
            out << "(";
            for (size_t i = 0; i < arguments.size(); ++i) {
                if (i)
                    out << ", ";
                emit(arguments[i]);
            }
            out << ")";
            return;
        }
        if (text == "[]:") {
            out << "[";
            emit(arguments.at(0));
            out << "]";
            return;
        }
        if (text == "{}:" || text == "#[]:") {
            emit(arguments.at(0));
            return;
        }
        if (isKeywordSelector(text)) {
            size_t argIndex = 0;
            size_t start = 0;
            bool first = true;
            while (start < text.size()) {
                size_t colon = text.find(':', start);
                if (!first)
                    out << " ";
                first = false;
                out << text.substr(start, colon - start + 1) << " ";
                emit(arguments.at(argIndex++));
                start = colon + 1;
            }
            return;
        }
        if (arguments.empty()) {
            out << text;
            return;
        }
        out << text << " ";
        emit(arguments.at(0));
    }

    /// Emits node, parenthesized when composite so that it can appear
    /// in any position.
    void emitPrimary(AstNode* node) {
        switch (node->nodeKind) {
        case NodeKind::Literal:
        case NodeKind::Identifier:
        case NodeKind::Sequence:
        case NodeKind::Lambda:
        case NodeKind::Tuple:
        case NodeKind::MakeDictionary:
        case NodeKind::MakeByteArray:
        case NodeKind::LiteralArray:
        case NodeKind::Quote:
        case NodeKind::QuasiQuote:
        case NodeKind::QuasiUnquote:
        case NodeKind::Splice:
        case NodeKind::LocalReference:
        case NodeKind::ArgumentReference:
        case NodeKind::CaptureReference:
            emit(node);
            return;
        default:
            out << "(";
            emit(node);
            out << ")";
            return;
        }
    }

    void emitStatements(const std::vector<AstNode*>& statements) {
        for (size_t i = 0; i < statements.size(); ++i) {
            if (i)
                out << ". ";
            emit(statements[i]);
        }
    }

    void emit(AstNode* node) {
        switch (node->nodeKind) {
        case NodeKind::Literal:
            emitValue(static_cast<LiteralNode*>(node)->value);
            return;
        case NodeKind::Identifier:
            out << static_cast<IdentifierNode*>(node)->name->text;
            return;
        case NodeKind::MessageSend: {
            auto* send = static_cast<MessageSendNode*>(node);
            out << "(";
            if (send->receiver) {
                emitPrimary(send->receiver);
                bool adjacent = false;
                if (auto* lit = dynamic_cast<LiteralNode*>(send->selector))
                    if (auto* sym = lit->value.as<SymbolObject>())
                        adjacent = sym->text == "[]:" || sym->text == "{}:" || sym->text == "#[]:";
                if (!adjacent)
                    out << " ";
            }
            emitSelectorAndArguments(send->selector, send->arguments);
            out << ")";
            return;
        }
        case NodeKind::FunctionApplication: {
            auto* app = static_cast<FunctionApplicationNode*>(node);
            emitPrimary(app->functional);
            out << "(";
            for (size_t i = 0; i < app->arguments.size(); ++i) {
                if (i)
                    out << ", ";
                emit(app->arguments[i]);
            }
            out << ")";
            return;
        }
        case NodeKind::Cascade: {
            auto* cascade = static_cast<CascadeNode*>(node);
            out << "(";
            emitPrimary(cascade->receiver);
            out << " ";
            for (size_t i = 0; i < cascade->messages.size(); ++i) {
                if (i)
                    out << "; ";
                emitSelectorAndArguments(cascade->messages[i].selector, cascade->messages[i].arguments);
            }
            out << ")";
            return;
        }
        case NodeKind::Sequence: {
            auto* seq = static_cast<SequenceNode*>(node);
            if (seq->freshScope) {
                out << "{";
                emitStatements(seq->expressions);
                out << "}";
            } else {
                emitStatements(seq->expressions);
            }
            return;
        }
        case NodeKind::Lambda: {
            auto* lambda = static_cast<LambdaNode*>(node);
            out << "{";
            for (const auto& arg : lambda->argumentNodes) {
                out << ":";
                if (arg.typeNode) {
                    out << "(";
                    emit(arg.typeNode);
                    out << ")";
                }
                out << arg.name->text << " ";
            }
            if (lambda->resultTypeNode) {
                out << ":: ";
                emit(lambda->resultTypeNode);
                out << " ";
            }
            out << "| ";
            if (lambda->body->nodeKind == NodeKind::Sequence)
                emitStatements(static_cast<SequenceNode*>(lambda->body)->expressions);
            else
                emit(lambda->body);
            out << "}";
            return;
        }
        case NodeKind::Tuple: {
            auto* tuple = static_cast<TupleNode*>(node);
            out << "(";
            for (size_t i = 0; i < tuple->elements.size(); ++i) {
                if (i)
                    out << ", ";
                emit(tuple->elements[i]);
            }
            out << ")";
            return;
        }
        case NodeKind::MakeDictionary: {
            auto* dict = static_cast<MakeDictionaryNode*>(node);
            out << "#{";
            for (size_t i = 0; i < dict->pairs.size(); ++i) {
                if (i)
                    out << ". ";
                emitPrimary(dict->pairs[i].first);
                out << " : ";
                emit(dict->pairs[i].second);
            }
            out << "}";
            return;
        }
        case NodeKind::MakeByteArray: {
            auto* arr = static_cast<MakeByteArrayNode*>(node);
            out << "#[";
            for (size_t i = 0; i < arr->elements.size(); ++i) {
                if (i)
                    out << " . ";
                emit(arr->elements[i]);
            }
            out << "]";
            return;
        }
        case NodeKind::LiteralArray: {
            auto* arr = static_cast<LiteralArrayNode*>(node);
            out << "#(";
            for (size_t i = 0; i < arr->elements.size(); ++i) {
                if (i)
                    out << " ";
                AstNode* element = arr->elements[i];
                if (element->nodeKind == NodeKind::LiteralArray) {
                    // Nested arrays print without the # prefix.
                    auto* nested = static_cast<LiteralArrayNode*>(element);
                    out << "(";
                    for (size_t j = 0; j < nested->elements.size(); ++j) {
                        if (j)
                            out << " ";
                        emit(nested->elements[j]);
                    }
                    out << ")";
                } else {
                    emit(element);
                }
            }
            out << ")";
            return;
        }
        case NodeKind::Quote:
            out << "`'";
            emitPrimary(static_cast<QuoteNode*>(node)->inner);
            return;
        case NodeKind::QuasiQuote:
            out << "``";
            emitPrimary(static_cast<QuasiQuoteNode*>(node)->inner);
            return;
        case NodeKind::QuasiUnquote:
            out << "`,";
            emitPrimary(static_cast<QuasiUnquoteNode*>(node)->inner);
            return;
        case NodeKind::Splice:
            out << "`@";
            emitPrimary(static_cast<SpliceNode*>(node)->inner);
            return;
        // Analysis-produced nodes: best-effort, not round-trippable.
        case NodeKind::ArgumentReference:
            out << static_cast<ArgumentReferenceNode*>(node)->name->text;
            return;
        case NodeKind::CaptureReference:
            out << static_cast<CaptureReferenceNode*>(node)->name->text;
            return;
        case NodeKind::LocalReference:
            out << static_cast<LocalReferenceNode*>(node)->name->text;
            return;
        case NodeKind::LocalDefinition: {
            auto* def = static_cast<LocalDefinitionNode*>(node);
            out << "(let " << def->name->text;
            if (def->isMutableCell)
                out << " mutable";
            out << " := ";
            emit(def->initialValue);
            out << ")";
            return;
        }
        case NodeKind::MakeClosure: {
            auto* closure = static_cast<MakeClosureNode*>(node);
            out << "(closure";
            if (closure->definition && closure->definition->name)
                out << " " << closure->definition->name->text;
            out << ")";
            return;
        }
        case NodeKind::If: {
            auto* ifNode = static_cast<IfNode*>(node);
            out << "(if: ";
            emit(ifNode->condition);
            out << " then: ";
            emitPrimary(ifNode->thenExpression);
            if (ifNode->elseExpression) {
                out << " else: ";
                emitPrimary(ifNode->elseExpression);
            }
            out << ")";
            return;
        }
        case NodeKind::While: {
            auto* whileNode = static_cast<WhileNode*>(node);
            out << "(while: ";
            emitPrimary(whileNode->condition);
            out << " do: ";
            emitPrimary(whileNode->body);
            out << ")";
            return;
        }
        case NodeKind::BuildNode: {
            out << "``";
            emitPrimary(static_cast<BuildNodeNode*>(node)->templateNode);
            return;
        }
        case NodeKind::TemplateHole:
            out << "`,hole" << static_cast<TemplateHoleNode*>(node)->holeIndex;
            return;
        }
    }
};

} // namespace

std::string unparse(const AstNode* node) {
    Unparser unparser;
    unparser.emit(const_cast<AstNode*>(node));
    std::string text = unparser.out.str();
    return text;
}

} // namespace sysmel
