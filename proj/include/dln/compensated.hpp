#pragma once
/// @file compensated.hpp
/// Minimal double-double ("compensated") arithmetic.
///
/// A value is stored as an unevaluated sum hi + lo with |lo| <= ulp(hi)/2,
/// giving roughly 32 significant decimal digits.  The certificate pipeline
/// uses this to evaluate its two discriminants: the inner one suffers a
/// catastrophic cancellation as dt -> 0 (two O(dt) groups cancel to O(dt^2)),
/// which plain doubles cannot survive.  Products use std::fma for an exact
/// error term.
///
/// Only the operations the pipeline needs are provided: +, -, *, /, sqrt,
/// comparisons against zero, and conversion to double.

#include <cmath>

namespace dln::dd {

struct Dd {
  double hi = 0.0;
  double lo = 0.0;

  Dd() = default;
  constexpr Dd(double h) : hi(h), lo(0.0) {}
  constexpr Dd(double h, double l) : hi(h), lo(l) {}

  double to_double() const { return hi + lo; }
};

/// Exact sum: s + err == a + b with s = fl(a + b).
inline Dd two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

/// Exact sum under |a| >= |b|.
inline Dd quick_two_sum(double a, double b) {
  const double s = a + b;
  const double err = b - (s - a);
  return {s, err};
}

/// Exact product: p + err == a * b with p = fl(a * b).
inline Dd two_prod(double a, double b) {
  const double p = a * b;
  const double err = std::fma(a, b, -p);
  return {p, err};
}

inline Dd operator+(const Dd& a, const Dd& b) {
  Dd s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline Dd operator-(const Dd& a) { return {-a.hi, -a.lo}; }

inline Dd operator-(const Dd& a, const Dd& b) { return a + (-b); }

inline Dd operator*(const Dd& a, const Dd& b) {
  Dd p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

inline Dd operator/(const Dd& a, const Dd& b) {
  const double q1 = a.hi / b.hi;
  Dd r = a - b * Dd(q1);
  const double q2 = r.hi / b.hi;
  r = r - b * Dd(q2);
  const double q3 = r.hi / b.hi;
  Dd q = quick_two_sum(q1, q2);
  return q + Dd(q3);
}

/// Square root by one Newton correction of the double estimate.
/// Requires a >= 0 (a.hi < 0 is the caller's error to detect first).
inline Dd sqrt(const Dd& a) {
  if (a.hi == 0.0) return {0.0, 0.0};
  const double x = std::sqrt(a.hi);
  const Dd err = a - two_prod(x, x);
  const double corr = err.to_double() / (2.0 * x);
  return quick_two_sum(x, corr);
}

inline Dd sqr(const Dd& a) { return a * a; }

inline bool is_negative(const Dd& a) { return a.hi < 0.0 || (a.hi == 0.0 && a.lo < 0.0); }

}  // namespace dln::dd
