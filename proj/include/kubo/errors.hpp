#pragma once

#include <stdexcept>
#include <string>

namespace kubo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad user input (parameters, grids, occupation specs).
class ValidationError : public Error {
public:
  using Error::Error;
};

class SingularLattice : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidGrid : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidOccupation : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class NonPositiveGamma : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class NonHermitianInput : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DimensionMismatch : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DimensionTooLarge : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidResolution : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DensityOutOfRange : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class ZeroTemperatureUnsupported : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class EmptyBasis : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class UnsupportedModel : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Model-file problems. `where` is a JSON pointer to the offending field.
class ParseError : public ValidationError {
public:
  ParseError(std::string where, const std::string& what)
      : ValidationError(where.empty() ? what : where + ": " + what),
        where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

private:
  std::string where_;
};

/// Numerical failures.
class NumericalError : public Error {
public:
  using Error::Error;
};

class NoConvergence : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class SimplicityViolated : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class StepSizeTooCoarse : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace kubo
