#pragma once

#include <stdexcept>
#include <string>

namespace medrec {

/// Base of every error the library raises. `kind()` is a stable, machine-readable tag
/// that the command-line front end prints verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("domain_error", m) {}
};
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& m) : Error("degenerate_configuration", m) {}
};
struct StructuralError : Error {
    explicit StructuralError(const std::string& m) : Error("structural_error", m) {}
};
struct LookupError : Error {
    explicit LookupError(const std::string& m) : Error("lookup_error", m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("configuration_error", m) {}
};
struct InvariantError : Error {
    explicit InvariantError(const std::string& m) : Error("invariant_violation", m) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error("validation_error", m) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& m) : Error("numerical_error", m) {}
};

/// Malformed input file. Carries the location so the CLI can name line and field.
class ParseError : public Error {
public:
    ParseError(const std::string& file, long line, const std::string& field, const std::string& m)
        : Error("parse_error", m), file_(file), line_(line), field_(field) {}

    const std::string& file() const noexcept { return file_; }
    long line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string file_;
    long line_;
    std::string field_;
};

}  // namespace medrec
