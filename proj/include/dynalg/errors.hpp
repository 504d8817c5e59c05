#pragma once

#include <stdexcept>
#include <string>

namespace dynalg {

// Error taxonomy. Exit-code mapping for the CLI lives in tools/.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain/support outside the usable grid range.
struct RangeError : Error {
    explicit RangeError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent arguments (component mismatch, mixed tags, ...).
struct ArgumentError : Error {
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// A stated precondition does not hold (cutoff not 1 on a support, ...).
struct PreconditionError : Error {
    explicit PreconditionError(const std::string& msg) : Error(msg) {}
};

// Causal ordering precondition violated.
struct CausalityError : PreconditionError {
    explicit CausalityError(const std::string& msg) : PreconditionError(msg) {}
};

// Weyl normal form requested outside the linear sector.
struct NormalFormError : Error {
    explicit NormalFormError(const std::string& msg) : Error(msg) {}
};

// Representation/grid configuration rejected (box leakage, horizon, ...).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Numerical environment failure (step-size underflow, leakage above policy).
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace dynalg
