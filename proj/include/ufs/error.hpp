#pragma once

#include <stdexcept>
#include <string>

namespace ufs {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

/// A scalar parameter (eta, epsilon) pushed an object outside the probability
/// simplex. Carries the largest value that would have been accepted.
class FeasibilityError : public Error {
public:
    FeasibilityError(const std::string& what, double max_feasible)
        : Error("infeasible", what), max_feasible_(max_feasible) {}

    double max_feasible() const noexcept { return max_feasible_; }

private:
    double max_feasible_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error("parse_error", what) {}
};

}  // namespace ufs
