#pragma once

#include <stdexcept>
#include <string>

namespace omcool {

/// Malformed or inconsistent configuration input.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An iterative solver failed to reach its tolerance.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), last_residual(residual) {}
    double last_residual;
};

/// The linear system is singular or effectively undamped (e.g. a dark mode
/// with zero intrinsic linewidth, or a parametric instability).
struct StabilityError : std::runtime_error {
    explicit StabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Generic numerical failure (step-size instability, non-converged quadrature).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace omcool
