#pragma once

#include <stdexcept>
#include <string>

namespace mlirl {

/// Invalid construction parameters or malformed configuration/input files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A documented precondition of an operation was violated by the caller.
class ContractViolation : public std::runtime_error {
public:
    explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver exhausted its budget before reaching tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

/// A structural problem detected in an environment (e.g. reducible chain).
class DiagnosticError : public std::runtime_error {
public:
    explicit DiagnosticError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mlirl
