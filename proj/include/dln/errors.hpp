#pragma once
/// @file errors.hpp
/// Typed runtime errors shared across the library.
///
/// Every error carries a human-readable message with the offending values
/// formatted at full precision, so CLI surfaces can print it verbatim.

#include <stdexcept>
#include <string>

namespace dln {

/// Requested time step is at or above the admissibility limit of the
/// stability certificate; the message quotes the computed limit.
class InadmissibleTimestep : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A discriminant that is provably nonnegative evaluated negative even after
/// the compensated (double-double) re-evaluation.  Signals that the requested
/// point sits too close to the admissibility boundary for working precision.
class NegativeDiscriminant : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A finite absorbing-ball transient time was requested with zero forcing;
/// the transient is infinite in that regime (the constants report an
/// infinity sentinel instead, and callers that need a finite value throw this).
class DegenerateForcing : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The averaging window r for the uniform gradient bounds must exceed five
/// times the time-step admissibility limit.
class WindowTooShort : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The nonlinear stage solver exhausted its iteration budget; the message
/// carries the last relative residual.
class NonConvergence : public std::runtime_error {
public:
  NonConvergence(const std::string& what, double last_residual, int iters)
      : std::runtime_error(what), last_residual(last_residual), iters(iters) {}
  double last_residual;
  int iters;
};

/// The solution norm exceeded the configured ceiling (instability guard for
/// deliberately out-of-hypothesis diagnostic runs).
class BlowUp : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace dln
