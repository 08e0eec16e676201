#pragma once

#include <stdexcept>
#include <string>

namespace pi2cma {

/// Invalid argument to a library operation (shape mismatch, out-of-range count, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A covariance matrix could not be factorized for sampling.
class DecompositionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A covariance matrix is too close to singular to be inverted.
class ConditioningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Least-squares fit of DMP weights failed (rank-deficient regression).
class FittingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment or task configuration is invalid.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A cost evaluation returned NaN or infinity.
class NonFiniteCostError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pi2cma
