#pragma once

#include <stdexcept>
#include <string>

namespace xaip {

struct SourcePos {
    int line = 0;
    int column = 0;

    std::string to_string() const { return std::to_string(line) + ":" + std::to_string(column); }
    bool operator==(const SourcePos&) const = default;
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed s-expression or token sequence.
class SyntaxError : public Error {
public:
    SyntaxError(SourcePos pos, const std::string& what)
        : Error(pos.to_string() + ": syntax error: " + what), pos(pos) {}
    SourcePos pos;
};

/// A well-formed PDDL construct that lies outside the supported subset.
class UnsupportedConstruct : public Error {
public:
    UnsupportedConstruct(SourcePos pos, std::string construct)
        : Error(pos.to_string() + ": unsupported construct: " + construct), pos(pos), construct(std::move(construct)) {}
    SourcePos pos;
    std::string construct;
};

/// Undeclared names, arity and type mismatches, duplicates.
class SemanticError : public Error {
public:
    explicit SemanticError(const std::string& what) : Error("semantic error: " + what) {}
    SemanticError(SourcePos pos, const std::string& what)
        : Error(pos.to_string() + ": semantic error: " + what), pos(pos) {}
    SourcePos pos;
};

/// Inputs that do not fit together (plan vs model, question vs plan).
class UsageError : public Error {
public:
    using Error::Error;
};

class CompilationError : public Error {
public:
    using Error::Error;
};

/// A result that should be impossible, such as an HPlan that fails
/// validation against the original model. Signals a bug, never user error.
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace xaip
