#pragma once

#include <stdexcept>
#include <string>

namespace safex {

/// Base class for all library errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad shapes, out-of-range parameters, non-finite input.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation needed rho(A) < 1 and did not get it.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// Least-squares / noise estimation failures (rank deficiency, too few samples,
/// non positive-definite second moment).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// A closed-form bound was requested outside the regime where it holds.
class BoundInapplicableError : public Error {
 public:
  using Error::Error;
};

/// Non-finite objective or failed initialisation inside the adversarial optimizer.
class OptimizerError : public Error {
 public:
  using Error::Error;
};

/// The nominal action is not certifiably safe, so no ball around it can be.
class NominalUnsafeError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace detail
}  // namespace safex
