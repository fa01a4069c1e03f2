#pragma once
/// @file gstability.hpp
/// Pair norms and the three algebraic stability identities of the method.
///
/// All three identities are exact statements in real arithmetic; the
/// functions below evaluate both sides independently and return LHS - RHS,
/// so the result measures floating-point error only.  Tolerance policy
/// lives in the tests, which normalize by the largest participating term.

#include <cmath>

#include "dln/method.hpp"
#include "dln/vecspace.hpp"

namespace dln::core {

/// Weighted pair norm squared: (1+theta)/4 * ||u||^2 + (1-theta)/4 * ||v||^2.
/// This is the G-weighted norm on consecutive state pairs (u = newer state).
template <InnerProductElement V>
double g_norm_sq(const V& u, const V& v, double theta) {
  validate_theta(theta);
  return (1.0 + theta) / 4.0 * inner(u, u) + (1.0 - theta) / 4.0 * inner(v, v);
}

/// Strengthened pair norm squared with certificate weights:
/// h11 * ||u||^2 + h22 * ||v||^2.
template <InnerProductElement V>
double h_norm_sq(const V& u, const V& v, double h11, double h22) {
  return h11 * inner(u, u) + h22 * inner(v, v);
}

/// Residual of the G-stability identity
///   (sum_l alpha_l y, y_beta) = ||(y_next, y_curr)||_G^2
///                             - ||(y_curr, y_prev)||_G^2
///                             + ||sum_l a_l y||^2.
template <InnerProductElement V>
double g_stability_residual(const StateTriple<V>& t, double theta) {
  const DlnCoefficients c = make_coefficients(theta);
  const V acomb = combine_alpha(t, c);
  const V bcomb = combine_beta(t, c);
  const V d = combine_dissip(t, c);
  const double lhs = inner(acomb, bcomb);
  const double rhs = g_norm_sq(t.y_next, t.y_curr, theta) -
                     g_norm_sq(t.y_curr, t.y_prev, theta) + inner(d, d);
  return lhs - rhs;
}

/// Residual of the first auxiliary identity
///   (sum_l alpha_l y, y_next) = G-difference
///                             + (theta/2)   * ||y_next - y_curr||^2
///                             + (1-theta)/4 * ||y_next - y_prev||^2.
template <InnerProductElement V>
double identity1_residual(const StateTriple<V>& t, double theta) {
  const DlnCoefficients c = make_coefficients(theta);
  const V acomb = combine_alpha(t, c);
  const double lhs = inner(acomb, t.y_next);
  const V d1 = t.y_next - t.y_curr;
  const V d2 = t.y_next - t.y_prev;
  const double rhs = g_norm_sq(t.y_next, t.y_curr, theta) -
                     g_norm_sq(t.y_curr, t.y_prev, theta) +
                     theta / 2.0 * inner(d1, d1) +
                     (1.0 - theta) / 4.0 * inner(d2, d2);
  return lhs - rhs;
}

/// Residual of the second auxiliary identity
///   (y_beta, y_next) = (2 beta_2 - 1) ||y_next||^2 + D_next - D_curr
///                    + (beta_1/2) ||y_next + y_curr||^2
///                    + (beta_0/2) ||y_next + y_prev||^2,
/// with the telescoping bracket
///   D_k = (beta_0 + beta_1)/2 * ||y_k||^2 + (beta_0/2) ||y_{k-1}||^2.
template <InnerProductElement V>
double identity2_residual(const StateTriple<V>& t, double theta) {
  const DlnCoefficients c = make_coefficients(theta);
  const V bcomb = combine_beta(t, c);
  const double lhs = inner(bcomb, t.y_next);
  const double b0 = c.beta[0], b1 = c.beta[1];
  const double nn = inner(t.y_next, t.y_next);
  const double nc = inner(t.y_curr, t.y_curr);
  const double np = inner(t.y_prev, t.y_prev);
  const double d_next = (b0 + b1) / 2.0 * nn + b0 / 2.0 * nc;
  const double d_curr = (b0 + b1) / 2.0 * nc + b0 / 2.0 * np;
  const V s1 = t.y_next + t.y_curr;
  const V s2 = t.y_next + t.y_prev;
  const double rhs = c.two_beta2_minus_one() * nn + d_next - d_curr +
                     b1 / 2.0 * inner(s1, s1) + b0 / 2.0 * inner(s2, s2);
  return lhs - rhs;
}

}  // namespace dln::core
