#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace swe {

/// Argument outside the mathematical domain of an operation (e.g. Riesz kernel at 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Experiment or solver configuration violates a stated invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two objects defined on different grids were combined.
class GridMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Zero-variance ensemble cannot be normalized.
class DegenerateEnsemble : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quadrature failed to converge; carries the cutoff history in the message.
class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalBlowup : public std::runtime_error {
public:
    explicit NumericalBlowup(std::int64_t step)
        : std::runtime_error("non-finite field value after step " + std::to_string(step)),
          step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

} // namespace swe
