#pragma once

#include <stdexcept>
#include <string>

namespace bgs {

/// Invalid configuration or construction parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands living in incompatible spaces.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear solve failed (singular or ill-posed system).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solution became non-finite.
class DivergenceError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Dense eigen- or factorization failure in a diagnostic computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bgs
