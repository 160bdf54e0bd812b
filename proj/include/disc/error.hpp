#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace disc {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A caller broke a documented precondition (e.g. submitted too many blocking vectors).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class SolverFailure : public Error {
public:
    using Error::Error;
};

class DeadRow : public Error {
public:
    using Error::Error;
};

} // namespace disc
