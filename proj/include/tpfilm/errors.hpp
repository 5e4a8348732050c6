/// @file errors.hpp
/// @brief Exception types shared by the solver, the scenario layer and the CLI.

#pragma once

#include <stdexcept>
#include <string>

namespace tpfilm {

/// A physical or numerical parameter lies outside its admissible domain.
class ParameterDomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A vector or grid does not have the length the basis expects.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Unsupported option or malformed request (derivative order, config key, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values, failed factorizations and similar numerical breakdowns.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The adaptive stepper needed a step below dt_min.
class StiffnessAbort : public NumericalError {
public:
    StiffnessAbort(const std::string& what, double t, double dt, double error_norm)
        : NumericalError(what), t_(t), dt_(dt), error_norm_(error_norm) {}

    double time() const noexcept { return t_; }
    double attempted_dt() const noexcept { return dt_; }
    double error_norm() const noexcept { return error_norm_; }

private:
    double t_;
    double dt_;
    double error_norm_;
};

}  // namespace tpfilm
