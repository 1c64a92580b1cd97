#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace demcorrect {

// Base of every error raised by the library. The CLI maps these to exit code 2
// (bad configuration or input); anything else is an internal failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input (ASCII grid, CSV). Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

// Violated precondition on values or geometry (mismatched grids, bad lengths).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed or incompatible serialized document.
class FormatError : public Error {
public:
    using Error::Error;
};

// Filtering left nothing to work with.
class EmptyTableError : public Error {
public:
    using Error::Error;
};

// Statistical diagnostic cannot be computed (e.g. zero-variance feature).
class DiagnosticError : public Error {
public:
    DiagnosticError(std::string feature, const std::string& what)
        : Error(what), feature_(std::move(feature)) {}
    const std::string& feature() const noexcept { return feature_; }

private:
    std::string feature_;
};

// Least-squares design matrix is rank deficient.
class SingularDesignError : public Error {
public:
    SingularDesignError(std::string column, const std::string& what)
        : Error(what), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace demcorrect
