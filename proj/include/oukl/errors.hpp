#pragma once

#include <stdexcept>
#include <string>

namespace oukl {

/// Malformed or non-finite input to an operation.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain (e.g. point outside the onion).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// The two-onion inclusion failed even at the analytic theta times the
/// safety factor. Must never fire; if it does, the kernels are wrong.
struct LemmaViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// det Q_t came out non-positive where the Kalman condition promised
/// positive definiteness.
struct KalmanViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad CLI configuration (maps to exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace oukl
