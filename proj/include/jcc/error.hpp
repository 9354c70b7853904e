#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jcc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Structurally invalid data: bad network, dimension mismatch, bad config.
class DataError : public Error {
public:
    using Error::Error;
};

/// The optimization model has no feasible point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Solver gave up: iteration or node limit, numerical failure.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace jcc
