#pragma once
/// @file bounds.hpp
/// Long-time a-priori bounds for the one-leg stepper applied to the 2D
/// incompressible Navier-Stokes equations.
///
/// Everything here is a closed-form constant chain: given the stability
/// certificate, initial-data norms, and the forcing amplitude, it
/// produces
///   * uniform-in-time kinetic-energy bounds (K1, K2) and the absorbing
///     ball radius rho0 with its entry time T_star,
///   * gradient-energy (enstrophy-level) bounds: a finite-window bound
///     K3(tau), window-uniform constants K4..K6, and the long-time
///     bounds rho1..rho3 that are independent of the initial data,
///   * the discrete Gronwall lemmas those bounds rest on.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dln/certificate.hpp"
#include "dln/errors.hpp"
#include "dln/format.hpp"

namespace dln::bounds {

inline void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0)) {
    throw std::domain_error(std::string(name) + " must be nonnegative; got " + format_g17(value));
  }
}

/// Uniform-in-time kinetic-energy constants.
struct L2Constants {
  double K1 = 0.0;        ///< uniform bound on the weighted energy ||(u_n, u_{n-1})||_H^2
  double K2 = 0.0;        ///< uniform bound on ||u_n||, n >= 2
  double rho0 = 0.0;      ///< absorbing-ball radius for ||u_N||^2 (zero iff unforced)
  double T_star = 0.0;    ///< entry time: ||u_N||^2 <= 2*rho0 once (N-1)*dt > T_star
  double C_h_eff = 0.0;   ///< max(h11, h22) from the certificate
  double C_eps_eff = 0.0; ///< nu*lambda1*dt/epsilon from the certificate
  double hatC_h = 0.0;    ///< C_h_eff divided by the h11 floor
};

/// Computes the kinetic-energy constant chain.
///
/// @param norm_u0,norm_u1  L2 norms (not squared) of the two starting fields.
/// @param f_inf            sup-in-time bound on the forcing L2 norm.
///
/// Unforced runs are a legitimate special case: f_inf = 0 gives rho0 = 0
/// and T_star = +infinity (the absorbing-ball statement is vacuous).
inline L2Constants l2_constants(const certificate::HCertificate& cert, double norm_u0,
                                double norm_u1, double f_inf) {
  require_nonnegative(norm_u0, "norm_u0");
  require_nonnegative(norm_u1, "norm_u1");
  require_nonnegative(f_inf, "f_inf");

  const double theta = cert.input.theta;
  const double nu = cert.input.nu;
  const double lambda1 = cert.input.lambda1;

  L2Constants out;
  out.C_h_eff = certificate::c_h_eff(cert);
  out.C_eps_eff = certificate::c_eps_eff(cert);
  const double floor11 = certificate::h11_floor(theta);
  const double ic_energy = norm_u1 * norm_u1 + norm_u0 * norm_u0;
  const double nl_sq = nu * nu * lambda1 * lambda1;

  out.K1 = out.C_h_eff * ic_energy + out.C_eps_eff / (2.0 * nl_sq) * f_inf * f_inf;
  out.K2 = std::sqrt(out.K1 / floor11);
  out.hatC_h = out.C_h_eff / floor11;

  if (f_inf == 0.0) {
    out.rho0 = 0.0;
    out.T_star = std::numeric_limits<double>::infinity();
  } else {
    out.rho0 = out.C_eps_eff * f_inf * f_inf /
               (nl_sq * theta * theta * theta * (1.0 - 0.5 * theta * (1.0 - theta)));
    const double t_star =
        4.0 * out.C_eps_eff / (nu * lambda1) * std::log(out.hatC_h * ic_energy / out.rho0);
    out.T_star = t_star > 0.0 ? t_star : 0.0;
  }
  return out;
}

/// Throws DegenerateForcing unless the absorbing-ball entry time is finite
/// (i.e. unless the run is actually forced).  Used by attractor-checking
/// simulation modes that have no meaning for unforced decay.
inline void require_finite_t_star(const L2Constants& l2) {
  if (!(l2.T_star < std::numeric_limits<double>::infinity())) {
    throw DegenerateForcing(
        "the absorbing-ball entry time is infinite because the forcing amplitude is zero; "
        "attractor-entry checks require a nonzero forcing");
  }
}

/// Coefficients of the quadratic-in-energy gradient inequalities.
struct KappaConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
};

/// kappa1/kappa2 are driven by the uniform energy bound K2, kappa3/kappa4
/// by the absorbing-ball radius rho0.  c_omega is the constant relating
/// the full H2 seminorm to the Laplacian L2 norm (1 on the torus).
inline KappaConstants kappa_constants(double theta, double nu, double c_omega, double K2,
                                      double rho0) {
  dln::core::validate_theta(theta);
  certificate::validate_positive(nu, "nu");
  certificate::validate_positive(c_omega, "c_omega");
  require_nonnegative(K2, "K2");
  require_nonnegative(rho0, "rho0");

  const double two_mt2 = 2.0 - theta * theta;
  const double nu3 = nu * nu * nu;
  const double denom2 = nu * nu * (2.0 - theta) * (2.0 - theta) * (1.0 + theta);
  KappaConstants k;
  k.kappa1 = 27.0 * two_mt2 * c_omega * c_omega * K2 * K2 / (16.0 * nu3);
  k.kappa2 = 3.0 + 8.0 * two_mt2 * K2 * K2 / denom2;
  k.kappa3 = 27.0 * two_mt2 * c_omega * c_omega * rho0 / (8.0 * nu3);
  k.kappa4 = 3.0 + 16.0 * two_mt2 * rho0 / denom2;
  return k;
}

/// Inputs of the finite-window gradient-energy bound K3(tau).
struct K3Inputs {
  double A1 = 0.0;            ///< weighted gradient energy of the starting pair
  double ic_g_norm_sq = 0.0;  ///< weighted kinetic energy of the starting pair
  double f_inf = 0.0;         ///< sup-in-time forcing amplitude
  double nu = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double c_dt = 0.0;          ///< admissibility limit entering the prefactor
};

/// Gradient-energy bound after elapsed time tau:
///   K3(tau) = (A1 + kappa1*C_dt*f^2/nu^2 * s + tau*f^2/(2nu)) * exp(kappa1*(kappa2+1)*s/nu)
/// with the dissipation budget s = 2*ic_g_norm_sq + tau*f^2/nu.
/// Increasing in tau; finite for unforced runs even at tau = +infinity.
inline double k3_at(const K3Inputs& in, double tau) {
  require_nonnegative(tau, "tau");
  const double f_sq = in.f_inf * in.f_inf;
  // Written so that an unforced run with an infinite horizon stays finite
  // (0 * infinity never appears).
  const double budget = 2.0 * in.ic_g_norm_sq + (f_sq > 0.0 ? tau / in.nu * f_sq : 0.0);
  const double prefactor = in.A1 + in.kappa1 * in.c_dt * f_sq / (in.nu * in.nu) * budget +
                           (f_sq > 0.0 ? tau / (2.0 * in.nu) * f_sq : 0.0);
  return prefactor * std::exp(in.kappa1 * (in.kappa2 + 1.0) / in.nu * budget);
}

/// Gradient-energy (enstrophy-level) constant chain.
struct H1Constants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  double K3 = 0.0;    ///< finite-window bound, evaluated at the run horizon
  double K4 = 0.0;    ///< window energy budget (infinite when unforced)
  double K5 = 0.0;    ///< window-uniform gradient bound (infinite when unforced)
  double K6 = 0.0;    ///< step-size threshold from K5 (infinite when unforced)
  double rho1 = 0.0;  ///< IC-independent window gradient bound
  double rho2 = 0.0;  ///< IC-independent long-time gradient bound
  double rho3 = 0.0;  ///< step-size threshold from rho1
  double r = 0.0;     ///< window length (> 5 * admissibility limit)
  double C_Omega = 0.0;
};

/// Computes the gradient-energy constant chain.
///
/// @param A1              weighted gradient energy of the starting pair; pass a
///                        negative value to have it computed from the gradient norms.
/// @param grad_norm_u0/1  L2 norms (not squared) of the starting velocity gradients.
/// @param r_window        sliding-window length; must exceed 5x the admissibility limit.
/// @param ic_g_norm_sq    weighted kinetic energy of the starting pair.
/// @param horizon_time    run length; K3 is evaluated at min(horizon, T_star + r).
///
/// Throws WindowTooShort when r_window <= 5 * max_timestep.  Unforced runs
/// get K4 = K5 = K6 = +infinity (their window machinery is vacuous) while
/// rho1, rho2, rho3 stay finite.
inline H1Constants h1_constants(const certificate::HCertificate& cert, const L2Constants& l2,
                                double A1, double grad_norm_u0, double grad_norm_u1, double f_inf,
                                double r_window, double ic_g_norm_sq, double horizon_time,
                                double c_omega = 1.0) {
  const double theta = cert.input.theta;
  const double nu = cert.input.nu;
  const double lambda1 = cert.input.lambda1;

  require_nonnegative(grad_norm_u0, "grad_norm_u0");
  require_nonnegative(grad_norm_u1, "grad_norm_u1");
  require_nonnegative(f_inf, "f_inf");
  require_nonnegative(ic_g_norm_sq, "ic_g_norm_sq");
  require_nonnegative(horizon_time, "horizon_time");

  const double c_dt = certificate::max_timestep(theta, nu, lambda1);
  if (!(r_window > 5.0 * c_dt)) {
    throw WindowTooShort("window length r=" + format_g17(r_window) +
                         " must exceed five times the admissibility limit, i.e. " +
                         format_g17(5.0 * c_dt));
  }
  if (A1 < 0.0) {
    A1 = 0.25 * (1.0 + theta) * grad_norm_u1 * grad_norm_u1 +
         0.25 * (1.0 - theta) * grad_norm_u0 * grad_norm_u0;
  }

  const KappaConstants kap = kappa_constants(theta, nu, c_omega, l2.K2, l2.rho0);
  const double inf = std::numeric_limits<double>::infinity();
  const double f_sq = f_inf * f_inf;
  const double rho0 = l2.rho0;

  H1Constants out;
  out.kappa1 = kap.kappa1;
  out.kappa2 = kap.kappa2;
  out.kappa3 = kap.kappa3;
  out.kappa4 = kap.kappa4;
  out.r = r_window;
  out.C_Omega = c_omega;

  const K3Inputs k3in{A1, ic_g_norm_sq, f_inf, nu, kap.kappa1, kap.kappa2, c_dt};
  out.K3 = k3_at(k3in, std::min(horizon_time, l2.T_star + r_window));

  const double b2 = (2.0 + theta - theta * theta) / 4.0;
  const double b1 = theta * theta / 2.0;
  const double b0 = (2.0 - theta - theta * theta) / 4.0;
  const double tb = 2.0 * b2 - 1.0;  // = theta*(1-theta)/2 > 0
  const double beta_sq = b0 * b0 + b1 * b1;

  if (f_inf == 0.0) {
    out.K4 = inf;
    out.K5 = inf;
    out.K6 = inf;
  } else {
    out.K4 = (1.0 + theta) * rho0 / (2.0 * l2.hatC_h) *
                 std::exp(nu * lambda1 * l2.T_star / (4.0 * l2.C_eps_eff)) +
             (l2.T_star + 2.0 * c_dt) / nu * f_sq;
    out.K5 = (A1 + kap.kappa1 * c_dt * f_sq * out.K4 / (nu * nu) +
              (l2.T_star + 2.0 * c_dt) / (2.0 * nu) * f_sq) *
             std::exp(kap.kappa1 * (kap.kappa2 + 1.0) * out.K4 / nu);
    out.K6 = tb * r_window / (4.0 * (4.0 + 3.0 * theta) * out.K5) *
             std::exp(kap.kappa3 * (kap.kappa4 + 1.0) / nu *
                      (2.0 * rho0 + r_window / (nu * lambda1) * f_sq));
  }

  // The rho chain reduces automatically at zero forcing (rho1 = rho2 = 1).
  const double window_budget = 2.0 * rho0 + r_window / (nu * lambda1) * f_sq;
  out.rho1 = (1.0 +
              16.0 * rho0 / (nu * tb * r_window) *
                  (1.0 + 4.0 * std::pow(rho0, 4) * beta_sq * beta_sq /
                             (std::pow(nu, 4) * tb * tb * tb)) +
              32.0 / (nu * nu * tb * tb * lambda1) *
                  (1.0 + rho0 * rho0 * beta_sq * beta_sq / (std::pow(nu, 4) * tb * tb)) * f_sq +
              kap.kappa3 * c_dt / (nu * nu) * f_sq * window_budget +
              r_window * f_sq / (2.0 * nu)) *
             std::exp(2.0 * kap.kappa3 * (kap.kappa4 + 1.0) / nu * window_budget);

  const double shifted_budget = 2.0 * (1.0 + theta) * rho0 + r_window / nu * f_sq;
  out.rho2 = (out.rho1 + kap.kappa3 * c_dt * f_sq / (nu * nu) * shifted_budget +
              r_window / (2.0 * nu) * f_sq) *
             std::exp(2.0 * kap.kappa3 * (kap.kappa4 + 1.0) / nu * shifted_budget);

  out.rho3 = tb * r_window / (4.0 * (4.0 + 3.0 * theta) * out.rho1) *
             std::exp(kap.kappa3 * (kap.kappa4 + 1.0) / nu * window_budget);

  return out;
}

/// Step-size ceiling under which the IC-independent gradient bound rho2
/// applies: min{C_dt, K6, rho3}.
inline double uniform_timestep_limit(double c_dt, double K6, double rho3) {
  certificate::validate_positive(c_dt, "c_dt");
  if (!(K6 > 0.0)) throw std::domain_error("K6 must be positive; got " + format_g17(K6));
  if (!(rho3 > 0.0)) throw std::domain_error("rho3 must be positive; got " + format_g17(rho3));
  return std::min(c_dt, std::min(K6, rho3));
}

/// Data of the discrete Gronwall lemma for
///   xi_n <= xi_{n-1} * (1 + k*eta_{n-1}) + k*zeta_n.
/// eta[i] holds eta_i for i = 0..n-1; zeta[i] holds zeta_i for i = 1..n
/// (zeta[0] is unused and must still be present: zeta.size() == eta.size()+1).
struct GronwallInput {
  double k = 0.0;
  double xi0 = 0.0;
  std::vector<double> eta;
  std::vector<double> zeta;
};

/// Bound at index n = eta.size():
///   xi_n <= xi_0*exp(sum k*eta_i) + sum_{i=1..n} k*zeta_i*exp(sum_{j=i..n-1} k*eta_j) + k*zeta_n.
inline double gronwall_bound(const GronwallInput& in) {
  certificate::validate_positive(in.k, "k");
  require_nonnegative(in.xi0, "xi0");
  if (in.zeta.size() != in.eta.size() + 1) {
    throw std::invalid_argument("gronwall_bound: zeta must have exactly one more entry than eta");
  }
  const size_t n = in.eta.size();
  if (n == 0) {
    throw std::invalid_argument("gronwall_bound: need at least one step");
  }
  for (double e : in.eta) require_nonnegative(e, "eta entries");
  for (double z : in.zeta) require_nonnegative(z, "zeta entries");

  // suffix[i] = sum_{j=i..n-1} k*eta_j, accumulated in a fixed order.
  std::vector<double> suffix(n + 1, 0.0);
  for (size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + in.k * in.eta[i];

  double bound = in.xi0 * std::exp(suffix[0]);
  for (size_t i = 1; i <= n; ++i) bound += in.k * in.zeta[i] * std::exp(suffix[i]);
  bound += in.k * in.zeta[n];
  return bound;
}

/// Sliding-window (uniform) Gronwall bound: given window sums
///   sum k*eta <= a1,  sum k*zeta <= a2,  sum k*xi <= a3
/// over any n2+1 consecutive indices in [n1, n_star], every xi_n with
/// n1 + n2 + 1 <= n <= n_star satisfies
///   xi_n <= (a3/(k*n2) + a2) * exp(a1).
inline double uniform_gronwall_bound(int n1, int n2, int n_star, double a1, double a2, double a3,
                                     double k) {
  if (!(n1 >= 0) || !(n2 >= 1)) {
    throw std::domain_error("uniform_gronwall_bound: need n1 >= 0 and n2 >= 1");
  }
  if (!(n1 < n_star) || !(n1 + n2 + 1 <= n_star)) {
    throw std::domain_error("uniform_gronwall_bound: window does not fit: need n1 < n_star and "
                            "n1 + n2 + 1 <= n_star");
  }
  certificate::validate_positive(k, "k");
  require_nonnegative(a1, "a1");
  require_nonnegative(a2, "a2");
  require_nonnegative(a3, "a3");
  return (a3 / (k * static_cast<double>(n2)) + a2) * std::exp(a1);
}

}  // namespace dln::bounds
