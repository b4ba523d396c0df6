#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace delayfb {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates its domain invariant (non-positive mass, dt <= 0, ...).
class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

/// Operation requested at parameters where the delayed system has no steady state.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// Stability verdict could not be resolved (contour repeatedly too close to a zero).
class IndeterminateStabilityError : public Error {
 public:
  using Error::Error;
};

/// A closed-form evaluation produced an inconsistent result (e.g. imaginary residue).
class NumericalInconsistencyError : public Error {
 public:
  NumericalInconsistencyError(const std::string& what, double value, double residue)
      : Error(what), value(value), residue(residue) {}
  double value;    // the real part that would have been returned
  double residue;  // relative imaginary residue
};

/// Quadrature failed to reach the requested accuracy.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved, double requested)
      : Error(what), achieved(achieved), requested(requested) {}
  double achieved;
  double requested;
};

/// Domain error: operation evaluated outside its validity region.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Correlation c(tau) is a 0/0 form at g = 0.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

/// |c| = 1: joint Gaussian covariance is singular.
class DegenerateCovarianceError : public Error {
 public:
  using Error::Error;
};

/// Non-Markovian bound denominator vanishes.
class SingularBoundError : public Error {
 public:
  using Error::Error;
};

/// Trajectory exceeded the overflow guard.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::uint64_t step) : Error(what), step(step) {}
  std::uint64_t step;
};

/// Bandpass band contains no FFT bins.
class DegenerateBandError : public Error {
 public:
  using Error::Error;
};

/// Welch estimator given fewer than two segments.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Series has zero variance where a normalized statistic is requested.
class ZeroVarianceError : public Error {
 public:
  using Error::Error;
};

/// Autocorrelation fit window could not be established.
class FitWindowError : public Error {
 public:
  using Error::Error;
};

/// Least-squares minimizer ended on the bracket boundary.
class NonIdentifiableError : public Error {
 public:
  using Error::Error;
};

}  // namespace delayfb
