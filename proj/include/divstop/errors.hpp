#pragma once

#include <stdexcept>
#include <string>

namespace divstop {

/// Input outside the mathematical domain of an operation (non-finite values,
/// negative rates, non-positive Bessel arguments, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Structurally invalid arguments (barrier above the state, unsorted grids,
/// degenerate brackets, malformed policies).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed: non-convergence, blow-up, non-finite result.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solver was called on a context that does not satisfy the structural
/// conditions it relies on (and no override was given).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested combination of model, payoff and attitude has no dedicated
/// solver.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Zero discount rates were supplied without choosing how an infinite
/// stopping time is valued.
class ConventionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration. `where` names the field and, when
/// known, the line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace divstop
