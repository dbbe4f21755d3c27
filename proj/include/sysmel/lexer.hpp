#ifndef SYSMEL_LEXER_HPP
#define SYSMEL_LEXER_HPP

#include "sysmel/token.hpp"

#include <string_view>
#include <vector>

namespace sysmel {

/// Tokenizes the whole source, appending a trailing End token.
/// Throws ParseError on unterminated literals, bad radix digits and
/// unknown characters.
std::vector<Token> tokenize(std::string_view source, const std::string& fileName);

} // namespace sysmel

#endif
