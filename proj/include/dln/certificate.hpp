#pragma once
/// @file certificate.hpp
/// Stability certificate for the one-parameter one-leg time stepper.
///
/// For an admissible step size the two-step method admits a weighted
/// energy norm ||(u,v)||_H^2 = h11*||u||^2 + h22*||v||^2 together with a
/// contraction factor 1/(1+epsilon).  The weights and epsilon are the
/// solution of a 3x3 symmetric matrix-equality system; this header
/// computes that solution in closed form, checks it against the defining
/// equations, and exposes the qualitative sign/size conditions that the
/// long-time estimates rely on.
///
/// Several intermediate quantities suffer catastrophic cancellation when
/// the step size is very small or very close to the admissibility limit,
/// so the whole closed-form chain is evaluated in double-double
/// arithmetic and only rounded to double at the end.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dln/compensated.hpp"
#include "dln/errors.hpp"
#include "dln/format.hpp"
#include "dln/method.hpp"

namespace dln::certificate {

/// Problem parameters the certificate depends on.
struct CertificateInput {
  double theta;    ///< method parameter, strictly inside (0,1)
  double nu;       ///< viscosity (> 0)
  double lambda1;  ///< smallest eigenvalue of the Stokes operator (> 0)
  double dt;       ///< time-step size (> 0)
};

inline void validate_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::domain_error(std::string(name) + " must be positive and finite; got " +
                            format_g17(value));
  }
}

/// Largest admissible step size for the energy-norm contraction estimate:
///   (1/(nu*lambda1)) * min{ 8*theta*(1-theta^2) / (8 - 6*theta^2 + 3*theta^4),
///                           2*(1-theta) }.
/// Below this threshold all certificate sign conditions hold.
inline double max_timestep(double theta, double nu, double lambda1) {
  dln::core::validate_theta(theta);
  validate_positive(nu, "nu");
  validate_positive(lambda1, "lambda1");
  const double t2 = theta * theta;
  const double first = 8.0 * theta * (1.0 - t2) / (8.0 - 6.0 * t2 + 3.0 * t2 * t2);
  const double second = 2.0 * (1.0 - theta);
  return std::min(first, second) / (nu * lambda1);
}

/// The certificate: weights, contraction margin, and the intermediate
/// quantities of the closed-form solution (kept for auditability).
struct HCertificate {
  CertificateInput input{};  ///< parameters the certificate was built for

  // Intermediates of the closed-form solution chain.
  double E = 0.0;           ///< nu*dt*lambda1*beta1*(beta2+beta0)/2 - a1^2  (< 0)
  double F = 0.0;           ///< nu*dt*lambda1*beta1*(beta2+beta0)/2 + 2*nu*dt*lambda1*beta2*beta0 (> 0)
  double x = 0.0;           ///< (a+b+c)^2, a rational function of the inputs
  double disc_outer = 0.0;  ///< x - 4E, discriminant splitting b from a+c
  double disc_inner = 0.0;  ///< x/2 + sqrt(x)*sqrt(x-4E)/2 - F, splitting a from c

  // Off-diagonal entries of the symmetric square-root factor.
  double a = 0.0;
  double b = 0.0;  ///< negative
  double c = 0.0;

  // Energy-norm weights and contraction margin.
  double h11 = 0.0;
  double h22 = 0.0;
  double epsilon = 0.0;

  // Coefficients of the quadratic h11^2 + B*h11 - C*h22 = 0 that fixes h11.
  double B = 0.0;  ///< negative
  double C = 0.0;  ///< positive; epsilon = C/h11 - 1

  /// Diagnostic only: the auxiliary parameter of the solution chain,
  /// recovered as 1 - 2x/(nu*dt*lambda1).
  double mu() const { return 1.0 - 2.0 * x / (input.nu * input.dt * input.lambda1); }
};

/// Solves the certificate equations in closed form.
///
/// Throws InadmissibleTimestep if dt is not strictly below
/// max_timestep(theta, nu, lambda1); throws NegativeDiscriminant if a
/// discriminant evaluates negative even in extended precision (cannot
/// happen for admissible inputs, kept as a hard internal check).
inline HCertificate build_certificate(const CertificateInput& in) {
  using dln::dd::Dd;

  dln::core::validate_theta(in.theta);
  validate_positive(in.nu, "nu");
  validate_positive(in.lambda1, "lambda1");
  validate_positive(in.dt, "dt");

  const double limit = max_timestep(in.theta, in.nu, in.lambda1);
  if (!(in.dt < limit)) {
    throw InadmissibleTimestep(
        "time step " + format_g17(in.dt) + " is not strictly below the admissibility limit " +
        format_g17(limit) + " for theta=" + format_g17(in.theta) + ", nu=" + format_g17(in.nu) +
        ", lambda1=" + format_g17(in.lambda1));
  }

  const Dd th(in.theta);
  const Dd tsq = dln::dd::sqr(th);
  const Dd one(1.0), two(2.0), four(4.0);
  const Dd half(0.5), quarter(0.25), eighth(0.125);

  // Method weights in extended precision.
  const Dd beta2 = (two + th - tsq) * quarter;
  const Dd beta1 = tsq * half;
  const Dd beta0 = (two - th - tsq) * quarter;
  const Dd a1sq = th * (one - tsq) * half;  // square of the middle dissipation weight

  const Dd m = Dd(in.nu) * Dd(in.dt) * Dd(in.lambda1);

  const Dd e_val = m * beta1 * (beta2 + beta0) * half - a1sq;
  const Dd f_val = m * beta1 * (beta2 + beta0) * half + two * m * beta2 * beta0;

  // x = num/den; den > 0 for every admissible step size.
  const Dd num = dln::dd::sqr(
      two * m * (two * beta2 * beta1 * beta0 * m - a1sq * (beta1 * (beta2 + beta0) + four * beta2 * beta0)));
  const Dd den = Dd(16.0) * (a1sq + two * m * beta2 * beta0) * (a1sq - m * beta1 * beta0) *
                 (a1sq - m * beta1 * beta2);
  const Dd x = num / den;

  const Dd disc_outer = x - four * e_val;
  if (dln::dd::is_negative(disc_outer)) {
    throw NegativeDiscriminant("outer discriminant x - 4E is negative: " +
                               format_g17(disc_outer.to_double()));
  }
  const Dd sqrt_x = dln::dd::sqrt(x);
  const Dd sqrt_outer = dln::dd::sqrt(disc_outer);

  const Dd disc_inner = x * half + sqrt_x * sqrt_outer * half - f_val;
  if (dln::dd::is_negative(disc_inner)) {
    throw NegativeDiscriminant("inner discriminant x/2 + sqrt(x)*sqrt(x-4E)/2 - F is negative: " +
                               format_g17(disc_inner.to_double()));
  }
  const Dd sqrt_inner = dln::dd::sqrt(disc_inner);

  const Dd b_val = (sqrt_x - sqrt_outer) * half;       // negative root
  const Dd a_plus_c = (sqrt_x + sqrt_outer) * half;    // positive
  const Dd c_val = (a_plus_c + sqrt_inner) * half;
  const Dd a_val = (a_plus_c - sqrt_inner) * half;

  const Dd h22 = dln::dd::sqr(c_val) + (one - th) * (two - th - tsq) * eighth -
                 m * dln::dd::sqr(beta0) * half;

  const Dd b_coef = m * dln::dd::sqr(beta1) * half - tsq * th * half - dln::dd::sqr(b_val);
  const Dd c_coef = m * dln::dd::sqr(beta2) * half + (one + th) * (two + th - tsq) * eighth -
                    dln::dd::sqr(a_val);

  const Dd quad_disc = dln::dd::sqr(b_coef) + four * c_coef * h22;
  if (dln::dd::is_negative(quad_disc)) {
    throw NegativeDiscriminant("discriminant B^2 + 4*C*h22 of the weight quadratic is negative: " +
                               format_g17(quad_disc.to_double()));
  }
  const Dd h11 = (-b_coef + dln::dd::sqrt(quad_disc)) * half;
  const Dd eps = c_coef / h11 - one;

  HCertificate cert;
  cert.input = in;
  cert.E = e_val.to_double();
  cert.F = f_val.to_double();
  cert.x = x.to_double();
  cert.disc_outer = disc_outer.to_double();
  cert.disc_inner = disc_inner.to_double();
  cert.a = a_val.to_double();
  cert.b = b_val.to_double();
  cert.c = c_val.to_double();
  cert.h11 = h11.to_double();
  cert.h22 = h22.to_double();
  cert.epsilon = eps.to_double();
  cert.B = b_coef.to_double();
  cert.C = c_coef.to_double();
  return cert;
}

/// Residuals of the six defining equations, evaluated in plain double
/// arithmetic directly from the rounded certificate fields.  This is an
/// independent check of the closed-form solution: each residual should be
/// at most ~1e-10 relative to the size of the terms entering it.
struct SystemResiduals {
  std::array<double, 6> residual{};  ///< signed residual of each equation
  std::array<double, 6> scale{};     ///< magnitude of the largest term in each equation

  double worst_relative() const {
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double s = scale[i] > 0.0 ? scale[i] : 1.0;
      worst = std::max(worst, std::abs(residual[i]) / s);
    }
    return worst;
  }
};

inline SystemResiduals system_residuals(const HCertificate& cert, const CertificateInput& in) {
  const double th = in.theta;
  const double m = in.nu * in.dt * in.lambda1;
  const auto coeff = dln::core::make_coefficients(th);
  const double b2 = coeff.beta[2], b1 = coeff.beta[1], b0 = coeff.beta[0];
  const double a1sq = coeff.dissip[1] * coeff.dissip[1];

  const double one_eps = 1.0 + cert.epsilon;

  SystemResiduals out;
  auto fill = [&out](int i, std::initializer_list<double> plus, std::initializer_list<double> minus) {
    double r = 0.0, s = 0.0;
    for (double t : plus) {
      r += t;
      s = std::max(s, std::abs(t));
    }
    for (double t : minus) {
      r -= t;
      s = std::max(s, std::abs(t));
    }
    out.residual[static_cast<size_t>(i)] = r;
    out.scale[static_cast<size_t>(i)] = s;
  };

  // Diagonal equations.
  fill(0, {one_eps * cert.h11, cert.a * cert.a},
       {(1.0 + th) * (2.0 + th - th * th) / 8.0, m * b2 * b2 / 2.0});
  fill(1, {one_eps * cert.h22, cert.b * cert.b, th * th * th / 2.0},
       {cert.h11, m * b1 * b1 / 2.0});
  fill(2, {cert.c * cert.c},
       {cert.h22, (1.0 - th) * (th * th + th - 2.0) / 8.0 + m * b0 * b0 / 2.0});
  // Off-diagonal equations.
  fill(3, {2.0 * cert.a * cert.b, a1sq}, {m * b2 * b1});
  fill(4, {2.0 * cert.a * cert.c}, {m * b2 * b0, a1sq / 2.0});
  fill(5, {2.0 * cert.b * cert.c, a1sq}, {m * b1 * b0});
  return out;
}

/// Lower bound on h11 that holds for every admissible step size:
///   (theta^3/2) * (1 - theta*(1-theta)/2).
inline double h11_floor(double theta) {
  dln::core::validate_theta(theta);
  return 0.5 * theta * theta * theta * (1.0 - 0.5 * theta * (1.0 - theta));
}

/// Lower bound on h22 that holds for every admissible step size:
///   theta*(1-theta)^2*(1+theta)*(2+theta)/16.
inline double h22_floor(double theta) {
  dln::core::validate_theta(theta);
  return theta * (1.0 - theta) * (1.0 - theta) * (1.0 + theta) * (2.0 + theta) / 16.0;
}

/// Larger of the two energy-norm weights; converts the weighted norm into
/// the plain squared norm in the long-time estimates.
inline double c_h_eff(const HCertificate& cert) { return std::max(cert.h11, cert.h22); }

/// nu*lambda1*dt/epsilon; multiplies the forcing term in the long-time
/// estimates and stays bounded as dt -> 0.
inline double c_eps_eff(const HCertificate& cert) {
  return cert.input.nu * cert.input.lambda1 * cert.input.dt / cert.epsilon;
}

/// Scale factor for the reciprocal-contraction check in BoundFlags:
/// 1/epsilon must stay below c_eps_flag/(nu*lambda1*dt), with
///   c_eps_flag = 2*( sqrt(B^2 + 4*C*h22) + (2*h22 - B) ).
inline double c_eps_flag(const HCertificate& cert) {
  const double disc = std::sqrt(cert.B * cert.B + 4.0 * cert.C * cert.h22);
  return 2.0 * (disc + (2.0 * cert.h22 - cert.B));
}

/// Qualitative conditions on the certificate used by the long-time
/// estimates.  All must hold for any admissible step size.
struct BoundFlags {
  bool h11_above_floor = false;          ///< h11 > h11_floor(theta)
  bool h22_above_floor = false;          ///< h22 > h22_floor(theta)
  bool epsilon_below_four = false;       ///< epsilon < 4
  bool inv_epsilon_above_quarter = false;///< 1/epsilon > 1/4
  bool inv_epsilon_bounded = false;      ///< 1/epsilon < c_eps_flag/(nu*lambda1*dt)
  bool x_below_quarter_m = false;        ///< x < nu*dt*lambda1/4
  bool e_negative = false;               ///< E < 0
  bool f_positive = false;               ///< F > 0

  bool all() const {
    return h11_above_floor && h22_above_floor && epsilon_below_four &&
           inv_epsilon_above_quarter && inv_epsilon_bounded && x_below_quarter_m && e_negative &&
           f_positive;
  }
};

inline BoundFlags bound_flags(const HCertificate& cert) {
  const CertificateInput& in = cert.input;
  const double m = in.nu * in.dt * in.lambda1;
  BoundFlags flags;
  flags.h11_above_floor = cert.h11 > h11_floor(in.theta);
  flags.h22_above_floor = cert.h22 > h22_floor(in.theta);
  flags.epsilon_below_four = cert.epsilon < 4.0;
  flags.inv_epsilon_above_quarter =
      cert.epsilon > 0.0 && (1.0 / cert.epsilon) > 0.25;
  flags.inv_epsilon_bounded = cert.epsilon > 0.0 && (1.0 / cert.epsilon) < c_eps_flag(cert) / m;
  flags.x_below_quarter_m = cert.x < m / 4.0;
  flags.e_negative = cert.E < 0.0;
  flags.f_positive = cert.F > 0.0;
  return flags;
}

}  // namespace dln::certificate
