#pragma once
/// @file method.hpp
/// The one-parameter family of two-step one-leg time-stepping coefficients.
///
/// For a parameter theta strictly inside (0,1) the family interpolates
/// between the implicit midpoint rule and the trapezoid-like endpoint
/// schemes while staying second-order accurate and G-stable.  The scheme
/// advances (1/dt)*sum_l alpha_l y_{n-1+l} = f(sum_l beta_l y_{n-1+l}),
/// evaluating the right-hand side once at the beta-combination of states.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dln/vecspace.hpp"

namespace dln::core {

/// Throws std::domain_error unless theta lies strictly inside (0,1).
inline void validate_theta(double theta) {
  if (!(theta > 0.0) || !(theta < 1.0)) {
    throw std::domain_error(
        "theta must lie strictly inside (0,1); got " + std::to_string(theta));
  }
}

/// Coefficient set of the two-step one-leg family for one value of theta.
///
/// Index l = 0,1,2 corresponds to states y_{n-1}, y_n, y_{n+1}.
/// `alpha` are the divided-difference weights, `beta` the state-combination
/// weights, and `dissip` the numerical-dissipation weights a_l whose
/// combination norm appears in the stability identity.
struct DlnCoefficients {
  double theta = 0.0;
  std::array<double, 3> alpha{};   ///< alpha_0, alpha_1, alpha_2; sums to 0
  std::array<double, 3> beta{};    ///< beta_0, beta_1, beta_2; sums to 1
  std::array<double, 3> dissip{};  ///< a_0, a_1, a_2; a_0 = a_2 = -a_1/2

  /// 2*beta_2 - 1 = theta(1-theta)/2 > 0, the pivotal positive weight in
  /// the strengthened pair-norm estimates.  Evaluated in the factored form;
  /// the literal difference cancels badly near the endpoints.
  double two_beta2_minus_one() const { return 0.5 * theta * (1.0 - theta); }
};

/// Builds the coefficient set for theta in (0,1).
inline DlnCoefficients make_coefficients(double theta) {
  validate_theta(theta);
  DlnCoefficients c;
  c.theta = theta;
  c.alpha = {(theta - 1.0) / 2.0, -theta, (theta + 1.0) / 2.0};
  c.beta = {(2.0 - theta - theta * theta) / 4.0, theta * theta / 2.0,
            (2.0 + theta - theta * theta) / 4.0};
  const double a1 = -std::sqrt(theta * (1.0 - theta * theta)) / std::sqrt(2.0);
  c.dissip = {-a1 / 2.0, a1, -a1 / 2.0};
  return c;
}

/// beta-combination of a state triple: beta_0 y_{n-1} + beta_1 y_n + beta_2 y_{n+1}.
template <InnerProductElement V>
V combine_beta(const StateTriple<V>& t, const DlnCoefficients& c) {
  return (c.beta[0] * t.y_prev) + ((c.beta[1] * t.y_curr) + (c.beta[2] * t.y_next));
}

/// alpha-combination of a state triple: alpha_0 y_{n-1} + alpha_1 y_n + alpha_2 y_{n+1}.
template <InnerProductElement V>
V combine_alpha(const StateTriple<V>& t, const DlnCoefficients& c) {
  return (c.alpha[0] * t.y_prev) + ((c.alpha[1] * t.y_curr) + (c.alpha[2] * t.y_next));
}

/// Dissipation combination a_0 y_{n-1} + a_1 y_n + a_2 y_{n+1}.
template <InnerProductElement V>
V combine_dissip(const StateTriple<V>& t, const DlnCoefficients& c) {
  return (c.dissip[0] * t.y_prev) + ((c.dissip[1] * t.y_curr) + (c.dissip[2] * t.y_next));
}

}  // namespace dln::core
