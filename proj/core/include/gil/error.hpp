#pragma once

#include <stdexcept>
#include <string>

namespace gil {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A potential (or one of its derivatives) produced a non-finite value.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A custom potential violates its declared curvature bounds.
class InvalidPotential : public Error {
 public:
  using Error::Error;
};

/// Curvature constants that cannot describe any admissible potential.
class InvalidConstants : public Error {
 public:
  using Error::Error;
};

/// An integral norm whose tail does not converge.
class DivergentNorm : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside of its documented precondition.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// A quadrature rule failed to converge at its node cap.
class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

/// MCMC diagnostics (acceptance window, gradient check) failed.
class ChainDiagnosticsError : public Error {
 public:
  using Error::Error;
};

/// Monte Carlo log-mean estimate degenerated (weights collapsed).
class DegenerateEstimate : public Error {
 public:
  using Error::Error;
};

}  // namespace gil
