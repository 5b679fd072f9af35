#pragma once

#include <stdexcept>
#include <string>

namespace deshell {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (configuration, pulse sequence, grid).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pulse sequence violates one of its structural invariants.
class InvalidSequence : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Pulse geometry that cannot be realised, e.g. a stretched B2 running into R.
class GeometryError : public InvalidSequence {
 public:
  using InvalidSequence::InvalidSequence;
};

/// Fixed-step integration lost trace (step too coarse) or produced non-finite values.
class IntegrationDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace deshell
