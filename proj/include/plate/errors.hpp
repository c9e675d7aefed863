#pragma once

#include <stdexcept>
#include <string>

namespace plate {

/// Base class for every error raised by the library.
class PlateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: size/dimension mismatch, out-of-range parameters.
class InvalidInput : public PlateError {
public:
    using PlateError::PlateError;
};

/// A material model fails the symmetry, normalization or ellipticity checks.
class StructureViolation : public PlateError {
public:
    using PlateError::PlateError;
};

/// ||d^2 u||_inf exceeded the configured a-priori ceiling.
class BoundViolation : public PlateError {
public:
    BoundViolation(double value, double bound, double time = 0.0)
        : PlateError("a-priori bound violated: |d2u|_inf = " + std::to_string(value) +
                     " > " + std::to_string(bound) + " at t = " + std::to_string(time)),
          value_(value), bound_(bound), time_(time) {}

    double value() const { return value_; }
    double bound() const { return bound_; }
    double time() const { return time_; }

    BoundViolation at_time(double t) const { return {value_, bound_, t}; }

private:
    double value_;
    double bound_;
    double time_;
};

/// Fixed-point iteration inside a time step did not converge.
class StepFailure : public PlateError {
public:
    using PlateError::PlateError;
};

class QuadratureError : public PlateError {
public:
    QuadratureError(const std::string& what, double estimate)
        : PlateError(what + " (last relative change " + std::to_string(estimate) + ")"),
          estimate_(estimate) {}
    double estimate() const { return estimate_; }

private:
    double estimate_;
};

class ConfigError : public PlateError {
public:
    using PlateError::PlateError;
};

class AnalysisError : public PlateError {
public:
    using PlateError::PlateError;
};

}  // namespace plate
