#pragma once

#include <stdexcept>
#include <string>

namespace changepoint {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (guards, tolerances, simulation settings).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Data that cannot support the requested fit (singular scatter, identical rows).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

/// Covariance matrix failed the symmetric positive-definite factorization.
class FactorizationError : public DegenerateDataError {
public:
    using DegenerateDataError::DegenerateDataError;
};

/// A truncated series could not certify the requested precision.
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// A confidence level that the available probability mass cannot reach.
class UnreachableLevelError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based row and column when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long row = 0, long column = 0)
        : Error(what), row_(row), column_(column) {}

    long row() const noexcept { return row_; }
    long column() const noexcept { return column_; }

private:
    long row_;
    long column_;
};

} // namespace changepoint
