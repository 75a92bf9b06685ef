#pragma once

#include <stdexcept>
#include <string>

namespace cred {

// Base of every error the library throws. Callers that only need a message
// catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid model parameters or input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Sensitivity of a repeated eigenvalue is undefined.
class DegenerateEigenvalueError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Eigenvalue continuation jumped further than the continuity gate allows.
class TrackingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Query outside the swept range of a segment table.
class RangeError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Optimization instance could not be assembled.
class BuildError : public Error {
 public:
  using Error::Error;
};

// No feasible dispatch exists, even with load shedding.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A solved dispatch failed the exact eigenvalue check.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cred
