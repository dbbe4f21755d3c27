#include "sysmel/parser.hpp"
#include "sysmel/errors.hpp"
#include "sysmel/lexer.hpp"
#include "sysmel/runtime.hpp"

namespace sysmel {

namespace {

struct Parser {
    Runtime& rt;
    const std::vector<Token>& tokens;
    size_t pos = 0;

    Parser(Runtime& runtime, const std::vector<Token>& toks) : rt(runtime), tokens(toks) {}

    const Token& peek(size_t ahead = 0) const {
        size_t i = pos + ahead;
        return i < tokens.size() ? tokens[i] : tokens.back();
    }
    const Token& current() const { return peek(); }
    bool check(TokenKind kind) const { return current().kind == kind; }
    const Token& advance() { return tokens[pos < tokens.size() - 1 ? pos++ : pos]; }

    const Token& expect(TokenKind kind, const char* what) {
        if (!check(kind))
            throw ParseError(std::string("expected ") + what + ", got '" + current().text + "'",
                             current().position);
        return advance();
    }

    [[noreturn]] void fail(const std::string& message) {
        throw ParseError(message, current().position);
    }

    template <typename T>
    T* makeNode(const SourcePosition& start) {
        T* node = rt.make<T>();
        node->type = rt.astNodeClassFor(node->nodeKind);
        node->position = start;
        return node;
    }

    void closePosition(AstNode* node) {
        if (pos > 0)
            node->position.endOffset = tokens[pos - 1].position.endOffset;
    }

    LiteralNode* makeSelector(const std::string& text, const SourcePosition& at) {
        LiteralNode* node = makeNode<LiteralNode>(at);
        node->value = ObjectValue::heap(rt.intern(text));
        return node;
    }

    TypeObject* suffixType(LiteralSuffix suffix) {
        switch (suffix) {
        case LiteralSuffix::I8: return rt.builtins.int8;
        case LiteralSuffix::I16: return rt.builtins.int16;
        case LiteralSuffix::I32: return rt.builtins.int32;
        case LiteralSuffix::I64: return rt.builtins.int64;
        case LiteralSuffix::U8: return rt.builtins.uint8;
        case LiteralSuffix::U16: return rt.builtins.uint16;
        case LiteralSuffix::U32: return rt.builtins.uint32;
        case LiteralSuffix::U64: return rt.builtins.uint64;
        case LiteralSuffix::Size: return rt.builtins.size;
        case LiteralSuffix::F32: return rt.builtins.float32;
        case LiteralSuffix::F64: return rt.builtins.float64;
        case LiteralSuffix::None: return nullptr;
        }
        return nullptr;
    }

    LiteralNode* literalFromToken(const Token& token) {
        LiteralNode* node = makeNode<LiteralNode>(token.position);
        switch (token.kind) {
        case TokenKind::Integer: {
            TypeObject* t = suffixType(token.suffix);
            node->value = t ? rt.makePrimitiveInteger(token.integerValue, t)
                            : rt.makeInteger(token.integerValue);
            break;
        }
        case TokenKind::Float: {
            TypeObject* t = suffixType(token.suffix);
            node->value = rt.makeFloat(token.floatValue, t ? t : rt.builtins.float64);
            break;
        }
        case TokenKind::String:
            node->value = rt.makeString(token.stringValue);
            break;
        case TokenKind::Character:
            node->value = ObjectValue::character(token.characterValue);
            break;
        case TokenKind::Symbol:
            node->value = ObjectValue::heap(rt.intern(token.stringValue));
            break;
        default:
            fail("not a literal token");
        }
        return node;
    }

    // --- grammar, loosest to tightest ---

    SequenceNode* parseSequenceUntil(TokenKind closer, bool freshScope) {
        SequenceNode* seq = makeNode<SequenceNode>(current().position);
        seq->freshScope = freshScope;
        while (!check(closer) && !check(TokenKind::End)) {
            seq->expressions.push_back(parseExpression());
            while (check(TokenKind::Period))
                advance();
            // A missing period before another expression starts a new
            // statement rather than an error.
        }
        closePosition(seq);
        return seq;
    }

    AstNode* parseExpression() { return parseCascade(); }

    AstNode* parseCascade() { return cascadeTail(parseComma()); }

    AstNode* cascadeTail(AstNode* expr) {
        if (!check(TokenKind::Semicolon))
            return expr;
        auto* send = dynamic_cast<MessageSendNode*>(expr);
        if (!send || !send->receiver)
            fail("cascade requires a message send with a receiver");
        CascadeNode* cascade = makeNode<CascadeNode>(expr->position);
        cascade->receiver = send->receiver;
        cascade->messages.push_back({send->selector, send->arguments});
        while (check(TokenKind::Semicolon)) {
            advance();
            cascade->messages.push_back(parseCascadeMessage());
        }
        closePosition(cascade);
        return cascade;
    }

    CascadeMessage parseCascadeMessage() {
        if (check(TokenKind::Keyword)) {
            std::string selector;
            std::vector<AstNode*> args;
            SourcePosition at = current().position;
            while (check(TokenKind::Keyword)) {
                selector += advance().text;
                args.push_back(parseBinary());
            }
            return {makeSelector(selector, at), std::move(args)};
        }
        if (check(TokenKind::Identifier)) {
            const Token& t = advance();
            return {makeSelector(t.text, t.position), {}};
        }
        if (check(TokenKind::BinaryOperator)) {
            const Token& t = advance();
            return {makeSelector(t.text, t.position), {parseUnary()}};
        }
        fail("expected a message after ';'");
    }

    AstNode* parseComma() {
        AstNode* first = parseAssignment();
        if (!check(TokenKind::Comma))
            return first;
        TupleNode* tuple = makeNode<TupleNode>(first->position);
        tuple->elements.push_back(first);
        while (check(TokenKind::Comma)) {
            advance();
            tuple->elements.push_back(parseAssignment());
        }
        closePosition(tuple);
        return tuple;
    }

    AstNode* parseAssignment() {
        AstNode* lhs = parseLowPrecedence();
        if (!check(TokenKind::Assignment))
            return lhs;
        const Token& t = advance();
        MessageSendNode* send = makeNode<MessageSendNode>(lhs->position);
        send->receiver = lhs;
        send->selector = makeSelector(":=", t.position);
        // Right-associative; the right-hand side may be a cascade
        // (`x := obj msg: a; msg2`), which binds tighter than `:=`.
        send->arguments.push_back(cascadeTail(parseAssignment()));
        closePosition(send);
        return send;
    }

    AstNode* parseLowPrecedence() {
        AstNode* expr = parseKeyword();
        while (check(TokenKind::LowPrecedenceOperator)) {
            const Token& t = advance();
            MessageSendNode* send = makeNode<MessageSendNode>(expr->position);
            send->receiver = expr;
            send->selector = makeSelector(t.text, t.position);
            send->arguments.push_back(parseKeyword());
            closePosition(send);
            expr = send;
        }
        return expr;
    }

    AstNode* parseKeyword() {
        if (check(TokenKind::Keyword)) {
            // Keyword message without receiver.
            SourcePosition at = current().position;
            std::string selector;
            std::vector<AstNode*> args;
            while (check(TokenKind::Keyword)) {
                selector += advance().text;
                args.push_back(parseBinary());
            }
            MessageSendNode* send = makeNode<MessageSendNode>(at);
            send->receiver = nullptr;
            send->selector = makeSelector(selector, at);
            send->arguments = std::move(args);
            closePosition(send);
            return send;
        }
        AstNode* receiver = parseBinary();
        if (!check(TokenKind::Keyword))
            return receiver;
        SourcePosition at = current().position;
        std::string selector;
        std::vector<AstNode*> args;
        while (check(TokenKind::Keyword)) {
            selector += advance().text;
            args.push_back(parseBinary());
        }
        MessageSendNode* send = makeNode<MessageSendNode>(receiver->position);
        send->receiver = receiver;
        send->selector = makeSelector(selector, at);
        send->arguments = std::move(args);
        closePosition(send);
        return send;
    }

    AstNode* parseBinary() {
        AstNode* expr = parseUnary();
        // `|` outside a lambda header is an ordinary binary selector.
        while (check(TokenKind::BinaryOperator) || check(TokenKind::Bar)) {
            const Token& t = advance();
            MessageSendNode* send = makeNode<MessageSendNode>(expr->position);
            send->receiver = expr;
            send->selector = makeSelector(t.text, t.position);
            send->arguments.push_back(parseUnary());
            closePosition(send);
            expr = send;
        }
        return expr;
    }

    std::vector<AstNode*> parseParenArgumentList() {
        expect(TokenKind::LeftParen, "'('");
        std::vector<AstNode*> args;
        if (!check(TokenKind::RightParen)) {
            args.push_back(parseArgumentExpression());
            while (check(TokenKind::Comma)) {
                advance();
                args.push_back(parseArgumentExpression());
            }
        }
        expect(TokenKind::RightParen, "')'");
        return args;
    }

    AstNode* parseArgumentExpression() {
        if (check(TokenKind::Splice)) {
            const Token& t = advance();
            SpliceNode* splice = makeNode<SpliceNode>(t.position);
            splice->inner = parseAssignment();
            closePosition(splice);
            return splice;
        }
        // Arguments admit cascades: f(obj msg: a; msg2).
        return cascadeTail(parseAssignment());
    }

    AstNode* parseUnary() {
        AstNode* expr = parsePrimary();
        while (true) {
            if (check(TokenKind::Identifier)) {
                const Token& t = advance();
                MessageSendNode* send = makeNode<MessageSendNode>(expr->position);
                send->receiver = expr;
                send->selector = makeSelector(t.text, t.position);
                closePosition(send);
                expr = send;
                continue;
            }
            if (check(TokenKind::QuasiUnquote)) {
                // Unquoted selector position: a `,sel (args...)
                const Token& t = advance();
                QuasiUnquoteNode* unquote = makeNode<QuasiUnquoteNode>(t.position);
                unquote->inner = parsePrimary();
                closePosition(unquote);
                MessageSendNode* send = makeNode<MessageSendNode>(expr->position);
                send->receiver = expr;
                send->selector = unquote;
                if (check(TokenKind::LeftParen))
                    send->arguments = parseParenArgumentList();
                closePosition(send);
                expr = send;
                continue;
            }
            if (check(TokenKind::LeftParen)) {
                FunctionApplicationNode* app = makeNode<FunctionApplicationNode>(expr->position);
                app->functional = expr;
                app->arguments = parseParenArgumentList();
                closePosition(app);
                expr = app;
                continue;
            }
            if (check(TokenKind::LeftBracket) && current().adjacentToPrevious) {
                advance();
                MessageSendNode* send = makeNode<MessageSendNode>(expr->position);
                send->receiver = expr;
                send->selector = makeSelector("[]:", current().position);
                send->arguments.push_back(parseExpression());
                expect(TokenKind::RightBracket, "']'");
                closePosition(send);
                expr = send;
                continue;
            }
            if (check(TokenKind::LeftBrace) && current().adjacentToPrevious) {
                const Token& t = current();
                advance();
                MessageSendNode* send = makeNode<MessageSendNode>(expr->position);
                send->receiver = expr;
                send->selector = makeSelector("{}:", t.position);
                send->arguments.push_back(parseBraceBody(t.position));
                closePosition(send);
                expr = send;
                continue;
            }
            if (check(TokenKind::ByteArrayOpen) && current().adjacentToPrevious) {
                const Token& t = current();
                advance();
                MessageSendNode* send = makeNode<MessageSendNode>(expr->position);
                send->receiver = expr;
                send->selector = makeSelector("#[]:", t.position);
                send->arguments.push_back(parseByteArrayBody(t.position));
                closePosition(send);
                expr = send;
                continue;
            }
            break;
        }
        return expr;
    }

    AstNode* parseByteArrayBody(const SourcePosition& at) {
        MakeByteArrayNode* node = makeNode<MakeByteArrayNode>(at);
        while (!check(TokenKind::RightBracket) && !check(TokenKind::End)) {
            node->elements.push_back(parseAssignment());
            while (check(TokenKind::Period))
                advance();
        }
        expect(TokenKind::RightBracket, "']'");
        closePosition(node);
        return node;
    }

    AstNode* parseBraceBody(const SourcePosition& at) {
        if (check(TokenKind::Colon) || check(TokenKind::DoubleColon) || check(TokenKind::Bar))
            return parseLambda(at);
        SequenceNode* seq = parseSequenceUntil(TokenKind::RightBrace, true);
        seq->position = at;
        expect(TokenKind::RightBrace, "'}'");
        closePosition(seq);
        return seq;
    }

    AstNode* parseLambda(const SourcePosition& at) {
        LambdaNode* lambda = makeNode<LambdaNode>(at);
        while (check(TokenKind::Colon)) {
            advance();
            LambdaArgument arg;
            if (check(TokenKind::LeftParen)) {
                advance();
                arg.typeNode = parseExpression();
                expect(TokenKind::RightParen, "')'");
            }
            const Token& name = expect(TokenKind::Identifier, "argument name");
            arg.name = rt.intern(name.text);
            lambda->argumentNodes.push_back(arg);
        }
        if (check(TokenKind::DoubleColon)) {
            advance();
            // Unary-level only, so the header bar is not mistaken for a
            // binary `|` send.
            lambda->resultTypeNode = parseUnary();
        }
        expect(TokenKind::Bar, "'|' in lambda header");
        lambda->body = parseSequenceUntil(TokenKind::RightBrace, false);
        expect(TokenKind::RightBrace, "'}'");
        closePosition(lambda);
        return lambda;
    }

    AstNode* parseLiteralArrayBody(const SourcePosition& at) {
        LiteralArrayNode* node = makeNode<LiteralArrayNode>(at);
        while (!check(TokenKind::RightParen) && !check(TokenKind::End)) {
            const Token& t = current();
            switch (t.kind) {
            case TokenKind::Integer:
            case TokenKind::Float:
            case TokenKind::String:
            case TokenKind::Character:
            case TokenKind::Symbol:
                node->elements.push_back(literalFromToken(advance()));
                break;
            case TokenKind::Identifier:
            case TokenKind::Keyword: {
                // Bare words inside literal arrays read as symbols.
                advance();
                LiteralNode* lit = makeNode<LiteralNode>(t.position);
                lit->value = ObjectValue::heap(rt.intern(t.text));
                node->elements.push_back(lit);
                break;
            }
            case TokenKind::LeftParen:
            case TokenKind::LiteralArrayOpen: {
                advance();
                node->elements.push_back(parseLiteralArrayBody(t.position));
                break;
            }
            default:
                fail("literal arrays may contain only literals, symbols and nested arrays");
            }
        }
        expect(TokenKind::RightParen, "')'");
        closePosition(node);
        return node;
    }

    AstNode* parsePrimary() {
        const Token& t = current();
        switch (t.kind) {
        case TokenKind::Integer:
        case TokenKind::Float:
        case TokenKind::String:
        case TokenKind::Character:
        case TokenKind::Symbol:
            return literalFromToken(advance());
        case TokenKind::Identifier: {
            advance();
            IdentifierNode* node = makeNode<IdentifierNode>(t.position);
            node->name = rt.intern(t.text);
            return node;
        }
        case TokenKind::LeftParen: {
            advance();
            if (check(TokenKind::RightParen)) {
                advance();
                return makeNode<TupleNode>(t.position);
            }
            AstNode* inner = parseExpression();
            expect(TokenKind::RightParen, "')'");
            return inner;
        }
        case TokenKind::LeftBrace:
            advance();
            return parseBraceBody(t.position);
        case TokenKind::LiteralArrayOpen:
            advance();
            return parseLiteralArrayBody(t.position);
        case TokenKind::ByteArrayOpen:
            advance();
            return parseByteArrayBody(t.position);
        case TokenKind::DictionaryOpen: {
            advance();
            MakeDictionaryNode* dict = makeNode<MakeDictionaryNode>(t.position);
            while (!check(TokenKind::RightBrace) && !check(TokenKind::End)) {
                AstNode* key;
                if (check(TokenKind::Keyword)) {
                    const Token& kw = advance();
                    LiteralNode* lit = makeNode<LiteralNode>(kw.position);
                    lit->value = ObjectValue::heap(rt.intern(kw.text.substr(0, kw.text.size() - 1)));
                    key = lit;
                } else {
                    key = parseBinary();
                    expect(TokenKind::Colon, "':' after dictionary key");
                }
                dict->pairs.emplace_back(key, parseAssignment());
                while (check(TokenKind::Period))
                    advance();
            }
            expect(TokenKind::RightBrace, "'}'");
            closePosition(dict);
            return dict;
        }
        case TokenKind::Quote: {
            advance();
            QuoteNode* node = makeNode<QuoteNode>(t.position);
            node->inner = parsePrimary();
            closePosition(node);
            return node;
        }
        case TokenKind::QuasiQuote: {
            advance();
            QuasiQuoteNode* node = makeNode<QuasiQuoteNode>(t.position);
            node->inner = parsePrimary();
            closePosition(node);
            return node;
        }
        case TokenKind::QuasiUnquote: {
            advance();
            QuasiUnquoteNode* node = makeNode<QuasiUnquoteNode>(t.position);
            node->inner = parsePrimary();
            closePosition(node);
            return node;
        }
        case TokenKind::Splice: {
            advance();
            SpliceNode* node = makeNode<SpliceNode>(t.position);
            node->inner = parsePrimary();
            closePosition(node);
            return node;
        }
        default:
            fail(std::string("unexpected token '") + t.text + "'");
        }
    }
};

} // namespace

SequenceNode* parse(Runtime& runtime, const std::vector<Token>& tokens) {
    Parser parser(runtime, tokens);
    SequenceNode* program = parser.parseSequenceUntil(TokenKind::End, false);
    parser.expect(TokenKind::End, "end of input");
    return program;
}

SequenceNode* parseSource(Runtime& runtime, std::string_view source, const std::string& fileName) {
    return parse(runtime, tokenize(source, fileName));
}

} // namespace sysmel
