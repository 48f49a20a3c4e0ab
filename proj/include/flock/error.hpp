#pragma once

#include <stdexcept>
#include <string>

namespace flock {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes that do not agree with the framework.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A value outside the domain an operation accepts.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Gram matrix could not be factorized even after jitter, or a posterior
/// variance came out meaningfully negative.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Simulation state left the finite range.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Appending to a dataset that has been frozen.
class FrozenDatasetError : public Error {
public:
    using Error::Error;
};

}  // namespace flock
