#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>

namespace anisopr {

struct Trajectory;

/// Bad input: dimension mismatch, out-of-range parameter, malformed config.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function (e.g. p <= b*lambda_1
/// for a Laplace transform with a pole there).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An asymptotic form that needs a larger decay exponent (e.g. a > 1).
class UnsupportedExponent : public DomainError {
public:
    using DomainError::DomainError;
};

/// Result would overflow; carries the largest safe argument.
class RangeError : public std::range_error {
public:
    RangeError(const std::string& what, double safe_limit)
        : std::range_error(what), safe_limit_(safe_limit) {}
    double safe_limit() const noexcept { return safe_limit_; }

private:
    double safe_limit_;
};

/// Not enough usable data for a fit (too few bins, degenerate spectrum...).
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root finder / solver failed to converge or bracket.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite state reached during time integration. Holds the partial
/// trajectory recorded before the blow-up.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t step,
                    std::shared_ptr<const Trajectory> partial)
        : std::runtime_error(what), step_(step), partial_(std::move(partial)) {}

    std::size_t step() const noexcept { return step_; }
    const std::shared_ptr<const Trajectory>& partial() const noexcept { return partial_; }

private:
    std::size_t step_;
    std::shared_ptr<const Trajectory> partial_;
};

}  // namespace anisopr
