#pragma once

#include <stdexcept>
#include <string>

namespace ionfridge {

// Invalid user input: bad parameters, malformed scenario files, unknown keys.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A formula evaluated outside its domain (imaginary mode frequency, T at n = 0, ...).
class DomainError : public ValidationError {
public:
    explicit DomainError(const std::string& what) : ValidationError(what) {}
};

// Truncation could not reach the requested retained weight.
class TruncationError : public ValidationError {
public:
    explicit TruncationError(const std::string& what) : ValidationError(what) {}
};

// Numerical failure: eigensolver breakdown, fit non-convergence, degenerate sensitivity.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ionfridge
