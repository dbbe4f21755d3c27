#include "sysmel/lexer.hpp"
#include "sysmel/errors.hpp"

#include <cctype>

namespace sysmel {

const char* tokenKindName(TokenKind kind) {
    switch (kind) {
    case TokenKind::Integer: return "integer";
    case TokenKind::Float: return "float";
    case TokenKind::Symbol: return "symbol";
    case TokenKind::String: return "string";
    case TokenKind::Character: return "character";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Keyword: return "keyword";
    case TokenKind::BinaryOperator: return "binary-operator";
    case TokenKind::LowPrecedenceOperator: return "low-precedence-operator";
    case TokenKind::Assignment: return "assignment";
    case TokenKind::Colon: return "colon";
    case TokenKind::DoubleColon: return "double-colon";
    case TokenKind::Bar: return "bar";
    case TokenKind::Period: return "period";
    case TokenKind::Semicolon: return "semicolon";
    case TokenKind::Comma: return "comma";
    case TokenKind::LeftParen: return "left-paren";
    case TokenKind::RightParen: return "right-paren";
    case TokenKind::LeftBrace: return "left-brace";
    case TokenKind::RightBrace: return "right-brace";
    case TokenKind::LeftBracket: return "left-bracket";
    case TokenKind::RightBracket: return "right-bracket";
    case TokenKind::DictionaryOpen: return "dictionary-open";
    case TokenKind::ByteArrayOpen: return "byte-array-open";
    case TokenKind::LiteralArrayOpen: return "literal-array-open";
    case TokenKind::Quote: return "quote";
    case TokenKind::QuasiQuote: return "quasi-quote";
    case TokenKind::QuasiUnquote: return "quasi-unquote";
    case TokenKind::Splice: return "splice";
    case TokenKind::End: return "end";
    }
    return "?";
}

const char* semanticErrorKindName(SemanticError::Kind kind) {
    switch (kind) {
    case SemanticError::Kind::UnboundIdentifier: return "unbound-identifier";
    case SemanticError::Kind::NoSuchMethod: return "no-such-method";
    case SemanticError::Kind::ArityMismatch: return "arity-mismatch";
    case SemanticError::Kind::TypeMismatch: return "type-mismatch";
    case SemanticError::Kind::MacroError: return "macro-error";
    }
    return "?";
}

namespace {

bool isIdentifierStart(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
bool isIdentifierChar(char c) { return std::isalnum((unsigned char)c) || c == '_'; }
bool isDigit(char c) { return c >= '0' && c <= '9'; }

bool isOperatorChar(char c) {
    switch (c) {
    case '+': case '-': case '*': case '/': case '\\': case '~':
    case '<': case '>': case '=': case '&': case '%': case '?':
    case '!': case '^': case '@':
        return true;
    default:
        return false;
    }
}

int radixDigitValue(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'z') return c - 'a' + 10;
    if (c >= 'A' && c <= 'Z') return c - 'A' + 10;
    return -1;
}

struct Lexer {
    std::string_view source;
    std::string fileName;
    size_t pos = 0;
    size_t lineStart = 0;
    int line = 1;
    std::vector<Token> tokens;
    bool sawSeparation = true;

    explicit Lexer(std::string_view src, std::string file)
        : source(src), fileName(std::move(file)) {}

    char peek(size_t ahead = 0) const {
        return pos + ahead < source.size() ? source[pos + ahead] : '\0';
    }
    bool atEnd() const { return pos >= source.size(); }

    SourcePosition positionAt(size_t start) const {
        SourcePosition p;
        p.fileName = fileName;
        p.startOffset = start;
        p.endOffset = pos;
        p.line = line;
        p.column = int(start - lineStart) + 1;
        return p;
    }

    [[noreturn]] void fail(const std::string& message, size_t start) {
        throw ParseError(message, positionAt(start));
    }

    void advance() {
        if (source[pos] == '\n') {
            ++line;
            lineStart = pos + 1;
        }
        ++pos;
    }

    void skipSpacesAndComments() {
        while (!atEnd()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
                sawSeparation = true;
            } else if (c == '#' && peek(1) == '#') {
                while (!atEnd() && peek() != '\n')
                    advance();
                sawSeparation = true;
            } else {
                break;
            }
        }
    }

    Token& emit(TokenKind kind, size_t start) {
        Token t;
        t.kind = kind;
        t.text = std::string(source.substr(start, pos - start));
        t.position = positionAt(start);
        t.adjacentToPrevious = !sawSeparation;
        sawSeparation = false;
        tokens.push_back(std::move(t));
        return tokens.back();
    }

    bool previousTokenIsOperand() const {
        if (tokens.empty())
            return false;
        switch (tokens.back().kind) {
        case TokenKind::Integer:
        case TokenKind::Float:
        case TokenKind::String:
        case TokenKind::Character:
        case TokenKind::Symbol:
        case TokenKind::Identifier:
        case TokenKind::RightParen:
        case TokenKind::RightBrace:
        case TokenKind::RightBracket:
            return true;
        default:
            return false;
        }
    }

    LiteralSuffix scanSuffix() {
        size_t start = pos;
        if (!isIdentifierStart(peek()))
            return LiteralSuffix::None;
        size_t end = pos;
        while (end < source.size() && isIdentifierChar(source[end]))
            ++end;
        std::string word(source.substr(pos, end - pos));
        LiteralSuffix s = LiteralSuffix::None;
        if (word == "i8") s = LiteralSuffix::I8;
        else if (word == "i16") s = LiteralSuffix::I16;
        else if (word == "i32") s = LiteralSuffix::I32;
        else if (word == "i64") s = LiteralSuffix::I64;
        else if (word == "u8") s = LiteralSuffix::U8;
        else if (word == "u16") s = LiteralSuffix::U16;
        else if (word == "u32") s = LiteralSuffix::U32;
        else if (word == "u64") s = LiteralSuffix::U64;
        else if (word == "sz") s = LiteralSuffix::Size;
        else if (word == "f32") s = LiteralSuffix::F32;
        else if (word == "f64") s = LiteralSuffix::F64;
        if (s != LiteralSuffix::None)
            pos = start + word.size();
        return s;
    }

    void scanNumber(bool negative, size_t start) {
        BigInt magnitude = 0;
        while (isDigit(peek())) {
            magnitude = magnitude * 10 + (peek() - '0');
            advance();
        }
        if (peek() == 'r' && radixDigitValue(peek(1)) >= 0) {
            long radix = magnitude.convert_to<long>();
            if (radix < 2 || radix > 36)
                fail("radix out of range 2..36", start);
            advance(); // r
            BigInt value = 0;
            bool any = false;
            while (!atEnd()) {
                char c = peek();
                if (c == '_') {
                    advance();
                    continue;
                }
                int d = radixDigitValue(c);
                if (d < 0 || d >= radix)
                    break;
                value = value * radix + d;
                any = true;
                advance();
            }
            if (!any) {
                if (radixDigitValue(peek()) >= 0)
                    fail(std::string("digit '") + peek() + "' invalid for radix " + std::to_string(radix), start);
                fail("missing digits after radix", start);
            }
            LiteralSuffix suffix = scanSuffix();
            if (isIdentifierChar(peek()))
                fail(std::string("digit '") + peek() + "' invalid for radix " + std::to_string(radix), start);
            Token& t = emit(TokenKind::Integer, start);
            t.integerValue = negative ? BigInt(-value) : value;
            t.suffix = suffix;
            return;
        }
        bool isFloat = false;
        if (peek() == '.' && isDigit(peek(1))) {
            isFloat = true;
            advance();
            while (isDigit(peek()))
                advance();
        }
        if ((peek() == 'e' || peek() == 'E') &&
            (isDigit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && isDigit(peek(2))))) {
            isFloat = true;
            advance();
            if (peek() == '+' || peek() == '-')
                advance();
            while (isDigit(peek()))
                advance();
        }
        LiteralSuffix suffix = scanSuffix();
        if (suffix == LiteralSuffix::F32 || suffix == LiteralSuffix::F64)
            isFloat = true;
        if (isFloat) {
            Token& t = emit(TokenKind::Float, start);
            t.floatValue = std::stod(t.text);
            t.suffix = suffix;
        } else {
            Token& t = emit(TokenKind::Integer, start);
            t.integerValue = negative ? BigInt(-magnitude) : magnitude;
            t.suffix = suffix;
        }
    }

    std::string scanEscapedBody(char terminator, size_t start, const char* what) {
        std::string out;
        while (true) {
            if (atEnd())
                fail(std::string("unterminated ") + what, start);
            char c = peek();
            if (c == terminator) {
                advance();
                return out;
            }
            if (c == '\\') {
                advance();
                if (atEnd())
                    fail(std::string("unterminated ") + what, start);
                char e = peek();
                advance();
                switch (e) {
                case 'n': out.push_back('\n'); break;
                case 'r': out.push_back('\r'); break;
                case 't': out.push_back('\t'); break;
                case '0': out.push_back('\0'); break;
                case '\\': out.push_back('\\'); break;
                case '"': out.push_back('"'); break;
                case '\'': out.push_back('\''); break;
                default: out.push_back(e); break;
                }
            } else {
                out.push_back(c);
                advance();
            }
        }
    }

    // Identifier, keyword, or namespaced path (A::b, RawTuple::slotAt:put:).
    void scanIdentifierLike(size_t start) {
        while (isIdentifierChar(peek()))
            advance();
        bool isPath = false;
        while (peek() == ':' && peek(1) == ':' && isIdentifierStart(peek(2))) {
            isPath = true;
            advance();
            advance();
            while (isIdentifierChar(peek()))
                advance();
        }
        if (peek() == ':' && peek(1) != ':' && peek(1) != '=') {
            if (!isPath) {
                advance();
                emit(TokenKind::Keyword, start);
                return;
            }
            // Keyword selector tail inside a namespaced path.
            advance();
            while (isIdentifierStart(peek())) {
                size_t mark = pos;
                while (isIdentifierChar(peek()))
                    advance();
                if (peek() == ':' && peek(1) != ':' && peek(1) != '=') {
                    advance();
                } else {
                    pos = mark;
                    break;
                }
            }
            emit(TokenKind::Identifier, start);
            return;
        }
        emit(TokenKind::Identifier, start);
    }

    void scanHashForm(size_t start) {
        advance(); // #
        char c = peek();
        if (c == '(') {
            advance();
            emit(TokenKind::LiteralArrayOpen, start);
            return;
        }
        if (c == '[') {
            advance();
            emit(TokenKind::ByteArrayOpen, start);
            return;
        }
        if (c == '{') {
            advance();
            emit(TokenKind::DictionaryOpen, start);
            return;
        }
        if (c == '"') {
            advance();
            std::string body = scanEscapedBody('"', start, "symbol literal");
            Token& t = emit(TokenKind::Symbol, start);
            t.stringValue = body;
            return;
        }
        if (isIdentifierStart(c)) {
            size_t nameStart = pos;
            while (true) {
                while (isIdentifierChar(peek()))
                    advance();
                if (peek() == ':') {
                    advance();
                    if (isIdentifierStart(peek()))
                        continue;
                }
                break;
            }
            Token& t = emit(TokenKind::Symbol, start);
            t.stringValue = std::string(source.substr(nameStart, pos - nameStart));
            return;
        }
        if (isOperatorChar(c)) {
            size_t opStart = pos;
            while (isOperatorChar(peek()))
                advance();
            Token& t = emit(TokenKind::Symbol, start);
            t.stringValue = std::string(source.substr(opStart, pos - opStart));
            return;
        }
        fail("unknown character after '#'", start);
    }

    void run() {
        while (true) {
            skipSpacesAndComments();
            if (atEnd())
                break;
            size_t start = pos;
            char c = peek();
            if (isDigit(c)) {
                scanNumber(false, start);
                continue;
            }
            if (c == '-' && isDigit(peek(1)) && !previousTokenIsOperand()) {
                advance();
                scanNumber(true, start);
                continue;
            }
            if (isIdentifierStart(c)) {
                scanIdentifierLike(start);
                continue;
            }
            switch (c) {
            case '"': {
                advance();
                std::string body = scanEscapedBody('"', start, "string literal");
                Token& t = emit(TokenKind::String, start);
                t.stringValue = body;
                continue;
            }
            case '\'': {
                advance();
                std::string body = scanEscapedBody('\'', start, "character literal");
                if (body.size() != 1)
                    fail("character literal must contain exactly one character", start);
                Token& t = emit(TokenKind::Character, start);
                t.characterValue = (unsigned char)body[0];
                continue;
            }
            case '#':
                scanHashForm(start);
                continue;
            case '`': {
                advance();
                char n = peek();
                if (n == '\'') {
                    advance();
                    emit(TokenKind::Quote, start);
                } else if (n == '`') {
                    advance();
                    emit(TokenKind::QuasiQuote, start);
                } else if (n == ',') {
                    advance();
                    emit(TokenKind::QuasiUnquote, start);
                } else if (n == '@') {
                    advance();
                    emit(TokenKind::Splice, start);
                } else {
                    fail("unknown character after '`'", start);
                }
                continue;
            }
            case ':': {
                if (peek(1) == '=') {
                    advance();
                    advance();
                    emit(TokenKind::Assignment, start);
                } else if (peek(1) == ':') {
                    advance();
                    advance();
                    if (isOperatorChar(peek())) {
                        while (isOperatorChar(peek()))
                            advance();
                        emit(TokenKind::LowPrecedenceOperator, start);
                    } else {
                        emit(TokenKind::DoubleColon, start);
                    }
                } else {
                    advance();
                    emit(TokenKind::Colon, start);
                }
                continue;
            }
            case '.': advance(); emit(TokenKind::Period, start); continue;
            case ';': advance(); emit(TokenKind::Semicolon, start); continue;
            case ',': advance(); emit(TokenKind::Comma, start); continue;
            case '|': advance(); emit(TokenKind::Bar, start); continue;
            case '(': advance(); emit(TokenKind::LeftParen, start); continue;
            case ')': advance(); emit(TokenKind::RightParen, start); continue;
            case '{': advance(); emit(TokenKind::LeftBrace, start); continue;
            case '}': advance(); emit(TokenKind::RightBrace, start); continue;
            case '[': advance(); emit(TokenKind::LeftBracket, start); continue;
            case ']': advance(); emit(TokenKind::RightBracket, start); continue;
            default:
                break;
            }
            if (isOperatorChar(c)) {
                while (isOperatorChar(peek()))
                    advance();
                emit(TokenKind::BinaryOperator, start);
                continue;
            }
            fail(std::string("unknown character '") + c + "'", start);
        }
        size_t start = pos;
        emit(TokenKind::End, start);
    }
};

} // namespace

std::vector<Token> tokenize(std::string_view source, const std::string& fileName) {
    Lexer lexer(source, fileName);
    lexer.run();
    return std::move(lexer.tokens);
}

} // namespace sysmel
