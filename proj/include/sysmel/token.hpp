#ifndef SYSMEL_TOKEN_HPP
#define SYSMEL_TOKEN_HPP

#include "sysmel/source_position.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <vector>

namespace sysmel {

using BigInt = boost::multiprecision::cpp_int;

enum class TokenKind {
    Integer,
    Float,
    Symbol,
    String,
    Character,
    Identifier,
    Keyword,          // trailing-colon identifier, possibly multi-part
    BinaryOperator,
    LowPrecedenceOperator, // ::+ and friends
    Assignment,       // :=
    Colon,            // standalone : (lambda arguments, dictionary keys)
    DoubleColon,      // standalone :: (lambda result type)
    Bar,              // |
    Period,
    Semicolon,
    Comma,
    LeftParen,
    RightParen,
    LeftBrace,
    RightBrace,
    LeftBracket,
    RightBracket,
    DictionaryOpen,   // #{
    ByteArrayOpen,    // #[
    LiteralArrayOpen, // #(
    Quote,            // `'
    QuasiQuote,       // ``
    QuasiUnquote,     // `,
    Splice,           // `@
    End,
};

/// Numeric suffix tags attached to integer/float literals.
enum class LiteralSuffix {
    None,
    I8, I16, I32, I64,
    U8, U16, U32, U64,
    Size,
    F32, F64,
};

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    SourcePosition position;

    // Literal payloads, valid per kind.
    BigInt integerValue;
    double floatValue = 0.0;
    LiteralSuffix suffix = LiteralSuffix::None;
    std::string stringValue;   // decoded string/symbol/character payload
    char32_t characterValue = 0;

    // True when no whitespace/comment separated this token from the
    // previous one. Bracket-send forms (x[..], x{..}, x#[..]) require it.
    bool adjacentToPrevious = false;
};

const char* tokenKindName(TokenKind kind);

} // namespace sysmel

#endif
