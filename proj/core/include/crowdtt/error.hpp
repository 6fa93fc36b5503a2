#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowdtt {

// Base of every exception thrown by the library. The CLI maps these to
// "data error" exit codes; anything else escaping is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// No clip window satisfied the population bounds within the search budget.
class NotFound : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

}  // namespace crowdtt
