#ifndef SYSMEL_ERRORS_HPP
#define SYSMEL_ERRORS_HPP

#include "sysmel/source_position.hpp"

#include <stdexcept>
#include <string>

namespace sysmel {

struct ParseError : std::runtime_error {
    SourcePosition position;

    ParseError(std::string message, SourcePosition pos)
        : std::runtime_error(pos.describe() + ": " + message), position(std::move(pos)) {}
};

struct SemanticError : std::runtime_error {
    enum class Kind {
        UnboundIdentifier,
        NoSuchMethod,
        ArityMismatch,
        TypeMismatch,
        MacroError,
    };

    Kind kind;
    SourcePosition position;

    SemanticError(Kind k, std::string message, SourcePosition pos)
        : std::runtime_error(pos.describe() + ": " + message), kind(k), position(std::move(pos)) {}
};

/// Runtime failures: does-not-understand, division by zero, depth limits.
struct EvaluationError : std::runtime_error {
    explicit EvaluationError(const std::string& message) : std::runtime_error(message) {}
};

struct ImageError : std::runtime_error {
    explicit ImageError(const std::string& message) : std::runtime_error(message) {}
};

const char* semanticErrorKindName(SemanticError::Kind kind);

} // namespace sysmel

#endif
