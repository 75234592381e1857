#pragma once

#include <stdexcept>
#include <string>

namespace bjj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The imbalance reached |n| -> 1, where the equations of motion are singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// The ODE integrator could not make progress.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// A parameter map has no unique solution for the given inputs.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested inside the excluded band around the separatrix crossing.
class GuardBandError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed configuration or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bjj
