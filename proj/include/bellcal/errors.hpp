#pragma once

#include <stdexcept>
#include <string>

namespace bellcal {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a formula (negative k, η = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid user input: CSV/JSON parse failures, bad flag values.
class InputError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit requested with fewer than two distinct abscissae.
class DegenerateFitError : public CalibrationError {
 public:
  using CalibrationError::CalibrationError;
};

/// Root bracketing failed within the allowed search range.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// The accidental-count model does not apply (nonzero-trace operator, certificate mismatch).
class ModelAssumptionError : public Error {
 public:
  using Error::Error;
};

/// Requested Bell value lies outside the feasible range of the fitted model.
class InfeasibleTargetError : public Error {
 public:
  using Error::Error;
};

}  // namespace bellcal
