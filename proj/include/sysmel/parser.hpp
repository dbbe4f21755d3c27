#ifndef SYSMEL_PARSER_HPP
#define SYSMEL_PARSER_HPP

#include "sysmel/ast.hpp"
#include "sysmel/token.hpp"

#include <string_view>
#include <vector>

namespace sysmel {

class Runtime;

/// Parses a token stream into the top-level sequence of expressions.
SequenceNode* parse(Runtime& runtime, const std::vector<Token>& tokens);

/// tokenize + parse in one step.
SequenceNode* parseSource(Runtime& runtime, std::string_view source, const std::string& fileName);

/// Emits source text that re-parses to a structurally equal node.
std::string unparse(const AstNode* node);

} // namespace sysmel

#endif
