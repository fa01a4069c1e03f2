#pragma once
/// @file stepper.hpp
/// Time integration of the 2D incompressible Navier-Stokes equations with
/// the one-parameter one-leg two-step method, including the per-step
/// energy ledger and whole-run cumulative checks.
///
/// One step solves the stage equation in the combination
/// v = beta0*u_{n-1} + beta1*u_n + beta2*u_{n+1}:
///   (1/dt) * sum_l alpha_l u_{n-1+l} + nu*A v + P[(v.grad)v] = P f(t_beta),
/// where t_beta is the matching combination of time levels, then recovers
/// u_{n+1} = (v - beta1*u_n - beta0*u_{n-1}) / beta2.
///
/// Every step emits a LedgerRow recording the energy norms and the signed
/// margins (RHS - LHS, nonnegative means the inequality held) of the
/// per-step stability estimates.  run_simulation additionally maintains
/// the cumulative dissipation/enstrophy sums and the uniform-in-time
/// bound checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dln/bounds.hpp"
#include "dln/certificate.hpp"
#include "dln/errors.hpp"
#include "dln/gstability.hpp"
#include "dln/method.hpp"
#include "dln/spectral2d.hpp"

namespace dln::stepper {

using spectral2d::Forcing;
using spectral2d::TorusGrid;
using spectral2d::VelocityField;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Nonlinear stage solver configuration.
struct SolverPolicy {
  enum class Mode { fixed_point, newton_like };
  Mode mode = Mode::fixed_point;
  double tol = 1e-11;  ///< relative residual target
  int max_iter = 100;
};

/// One ledger row per time step; margins are RHS - LHS of the respective
/// inequality (>= 0 means the inequality held).  Fields that need the
/// stability certificate are NaN in diagnostic (inadmissible-step) runs.
struct LedgerRow {
  int64_t step_index = 0;      ///< index N of the newly produced solution u_N
  double t = 0.0;              ///< time of u_N
  double l2_sq = 0.0;          ///< ||u_N||^2
  double grad_sq = 0.0;        ///< ||grad u_N||^2
  double g_norm_sq = 0.0;      ///< weighted energy of the pair (u_N, u_{N-1})
  double h_norm_sq = kNaN;     ///< certificate-weighted energy of the pair
  double dissipation_sq = 0.0; ///< squared norm of the dissipation combination
  double A_n = 0.0;            ///< weighted gradient energy of the pair
  double stab_eq1_margin = 0.0;
  double gstab_nse1_margin = 0.0;
  double l2bound0_margin = kNaN;
  double h1_ineq2_margin = kNaN;
  int solver_iters = 0;
  double solver_residual = 0.0;
};

/// Extra per-step quantities consumed by the cumulative accumulators.
struct StepDiagnostics {
  double stage_l2_sq = 0.0;    ///< ||v||^2 at the stage point
  double stage_grad_sq = 0.0;  ///< ||grad v||^2
  double f_beta_norm = 0.0;    ///< ||f(t_beta)||
  double f_dot_stage = 0.0;    ///< (f(t_beta), v)
  double g_prev_sq = 0.0;      ///< weighted energy of the old pair
  double diff1_sq = 0.0;       ///< ||u_{n+1} - u_n||^2
  double diff0_sq = 0.0;       ///< ||u_{n+1} - u_{n-1}||^2
  double sum1_grad_sq = 0.0;   ///< ||grad(u_{n+1} + u_n)||^2
  double sum0_grad_sq = 0.0;   ///< ||grad(u_{n+1} + u_{n-1})||^2
  double diff1_grad_sq = 0.0;  ///< ||grad(u_{n+1} - u_n)||^2
  double diff0_grad_sq = 0.0;  ///< ||grad(u_{n+1} - u_{n-1})||^2
};

/// Rolling state: the two newest solution levels.
struct StepState {
  VelocityField u_prev;  ///< u_{n-1}
  VelocityField u_curr;  ///< u_n
  double t_curr = 0.0;   ///< time of u_curr
  int64_t index_curr = 0;
};

/// Everything advance() needs besides the state.
struct StepContext {
  dln::core::DlnCoefficients coeff;
  double nu = 0.0;
  double dt = 0.0;
  double lambda1 = 0.0;
  const Forcing* forcing = nullptr;
  SolverPolicy solver;
  const certificate::HCertificate* cert = nullptr;  ///< null => diagnostic mode
  double kappa2 = kNaN;                             ///< NaN => no gradient-recursion margin
};

/// Residual of the stage equation at the point v (Leray-projected field):
///   r = sigma*v + g + nu*A v + P[(v.grad)v] - P f,
/// where sigma*v + g rewrites (1/dt)*sum alpha_l u_{n-1+l} in terms of v.
/// include_advection = false drops the nonlinear term (Stokes variant).
inline VelocityField stage_residual(const dln::core::DlnCoefficients& c, double nu, double dt,
                                    const VelocityField& u_prev, const VelocityField& u_curr,
                                    const VelocityField& v, const VelocityField& f_beta,
                                    bool include_advection = true) {
  const double sigma = c.alpha[2] / (dt * c.beta[2]);
  const double c_prev = (c.alpha[0] - c.alpha[2] * c.beta[0] / c.beta[2]) / dt;
  const double c_curr = (c.alpha[1] - c.alpha[2] * c.beta[1] / c.beta[2]) / dt;

  VelocityField r = sigma * v + (c_prev * u_prev + c_curr * u_curr) +
                    nu * spectral2d::apply_stokes(v) - f_beta;
  if (include_advection) {
    VelocityField adv = spectral2d::advect(v, v);
    spectral2d::leray_project(adv);
    r = r + adv;
  }
  spectral2d::leray_project(r);
  return r;
}

namespace detail {

struct StageSolve {
  VelocityField v;
  int iters = 0;
  double residual = 0.0;  ///< achieved relative residual
};

/// Projected advection P[(v.grad)v].
inline VelocityField projected_advection(const VelocityField& v) {
  VelocityField adv = spectral2d::advect(v, v);
  spectral2d::leray_project(adv);
  return adv;
}

/// Fixed-point (Picard) iteration for sigma*v + nu*A v = rhs_lin - P[(v.grad)v].
/// The true equation residual after each update equals the advection
/// increment, which makes the convergence check exact and cheap.
inline StageSolve solve_fixed_point(const VelocityField& rhs_lin, double sigma, double nu,
                                    VelocityField v, const SolverPolicy& pol) {
  VelocityField adv = projected_advection(v);
  double rel = kInf;
  for (int it = 1; it <= pol.max_iter; ++it) {
    VelocityField v_new = spectral2d::solve_helmholtz(rhs_lin - adv, sigma, nu);
    VelocityField adv_new = projected_advection(v_new);
    const double scale = sigma * std::sqrt(spectral2d::l2_norm_sq(v_new)) + 1e-300;
    rel = std::sqrt(spectral2d::l2_norm_sq(adv_new - adv)) / scale;
    v = std::move(v_new);
    adv = std::move(adv_new);
    if (rel < pol.tol) {
      return {std::move(v), it, rel};
    }
  }
  throw NonConvergence("stage solve (fixed point) did not reach tolerance " +
                           format_g17(pol.tol) + " after " + std::to_string(pol.max_iter) +
                           " iterations; last relative residual " + format_g17(rel),
                       rel, pol.max_iter);
}

/// Newton-like iteration: solves the linearised equation
///   sigma*d + nu*A d + P[(d.grad)v + (v.grad)d] = -r
/// approximately (inner fixed-point sweeps on the advection coupling),
/// then updates v += d.  Convergence is measured on the true residual.
inline StageSolve solve_newton_like(const VelocityField& rhs_lin, double sigma, double nu,
                                    VelocityField v, const SolverPolicy& pol) {
  double rel = kInf;
  for (int it = 1; it <= pol.max_iter; ++it) {
    VelocityField r = sigma * v + nu * spectral2d::apply_stokes(v) + projected_advection(v) -
                      rhs_lin;
    const double scale = sigma * std::sqrt(spectral2d::l2_norm_sq(v)) + 1e-300;
    rel = std::sqrt(spectral2d::l2_norm_sq(r)) / scale;
    if (rel < pol.tol) {
      return {std::move(v), it - 1, rel};
    }
    VelocityField d = spectral2d::solve_helmholtz(-1.0 * r, sigma, nu);
    for (int inner = 0; inner < 8; ++inner) {
      VelocityField coup = spectral2d::advect(d, v) + spectral2d::advect(v, d);
      spectral2d::leray_project(coup);
      d = spectral2d::solve_helmholtz(-1.0 * r - coup, sigma, nu);
    }
    v = v + d;
  }
  throw NonConvergence("stage solve (newton-like) did not reach tolerance " +
                           format_g17(pol.tol) + " after " + std::to_string(pol.max_iter) +
                           " iterations; last relative residual " + format_g17(rel),
                       rel, pol.max_iter);
}

}  // namespace detail

/// Result of one step: the shifted state, the ledger row, and the extra
/// diagnostics the cumulative accumulators need.
struct AdvanceOutcome {
  StepState state;
  LedgerRow row;
  StepDiagnostics diag;
};

/// Performs one step of the two-leg method.
inline AdvanceOutcome advance(const StepState& s, const StepContext& ctx) {
  const auto& c = ctx.coeff;
  const double dt = ctx.dt;
  const double theta = c.theta;
  const double sigma = c.alpha[2] / (dt * c.beta[2]);
  const double c_prev = (c.alpha[0] - c.alpha[2] * c.beta[0] / c.beta[2]) / dt;
  const double c_curr = (c.alpha[1] - c.alpha[2] * c.beta[1] / c.beta[2]) / dt;

  // Stage time level: the beta-combination of t_{n-1}, t_n, t_{n+1}.
  const double t_beta =
      c.beta[0] * (s.t_curr - dt) + c.beta[1] * s.t_curr + c.beta[2] * (s.t_curr + dt);
  const VelocityField f_beta = ctx.forcing->at(t_beta);

  // Linear part of the fixed-point/Newton right-hand side.
  const VelocityField rhs_lin = f_beta - (c_prev * s.u_prev + c_curr * s.u_curr);

  // Second-order initial guess: beta-combination with u_{n+1} extrapolated.
  VelocityField v_guess =
      (c.beta[0] - c.beta[2]) * s.u_prev + (c.beta[1] + 2.0 * c.beta[2]) * s.u_curr;

  detail::StageSolve sol =
      ctx.solver.mode == SolverPolicy::Mode::fixed_point
          ? detail::solve_fixed_point(rhs_lin, sigma, ctx.nu, std::move(v_guess), ctx.solver)
          : detail::solve_newton_like(rhs_lin, sigma, ctx.nu, std::move(v_guess), ctx.solver);

  const VelocityField& v = sol.v;
  VelocityField u_next =
      (1.0 / c.beta[2]) * (v - (c.beta[1] * s.u_curr + c.beta[0] * s.u_prev));

  AdvanceOutcome out;
  out.row.step_index = s.index_curr + 1;
  out.row.t = s.t_curr + dt;
  out.row.solver_iters = sol.iters;
  out.row.solver_residual = sol.residual;

  // --- Norms of the new pair -------------------------------------------
  const double l2_next = spectral2d::l2_norm_sq(u_next);
  const double l2_curr = spectral2d::l2_norm_sq(s.u_curr);
  const double l2_prev = spectral2d::l2_norm_sq(s.u_prev);
  const double grad_next = spectral2d::grad_norm_sq(u_next);
  const double grad_curr = spectral2d::grad_norm_sq(s.u_curr);
  out.row.l2_sq = l2_next;
  out.row.grad_sq = grad_next;
  out.row.g_norm_sq = 0.25 * (1.0 + theta) * l2_next + 0.25 * (1.0 - theta) * l2_curr;
  out.diag.g_prev_sq = 0.25 * (1.0 + theta) * l2_curr + 0.25 * (1.0 - theta) * l2_prev;
  out.row.A_n = 0.25 * (1.0 + theta) * grad_next + 0.25 * (1.0 - theta) * grad_curr;

  const VelocityField d_comb =
      dln::core::combine_dissip(dln::core::StateTriple<VelocityField>{s.u_prev, s.u_curr, u_next}, c);
  out.row.dissipation_sq = spectral2d::l2_norm_sq(d_comb);

  out.diag.stage_l2_sq = spectral2d::l2_norm_sq(v);
  out.diag.stage_grad_sq = spectral2d::grad_norm_sq(v);
  out.diag.f_beta_norm = ctx.forcing->norm_at(t_beta);
  out.diag.f_dot_stage = inner(f_beta, v);

  {
    const VelocityField diff1 = u_next - s.u_curr;
    const VelocityField diff0 = u_next - s.u_prev;
    const VelocityField sum1 = u_next + s.u_curr;
    const VelocityField sum0 = u_next + s.u_prev;
    out.diag.diff1_sq = spectral2d::l2_norm_sq(diff1);
    out.diag.diff0_sq = spectral2d::l2_norm_sq(diff0);
    out.diag.diff1_grad_sq = spectral2d::grad_norm_sq(diff1);
    out.diag.diff0_grad_sq = spectral2d::grad_norm_sq(diff0);
    out.diag.sum1_grad_sq = spectral2d::grad_norm_sq(sum1);
    out.diag.sum0_grad_sq = spectral2d::grad_norm_sq(sum0);
  }

  // --- Per-step inequality margins (RHS - LHS) --------------------------
  const double f_inf = ctx.forcing->f_inf;
  const double g_diff = out.row.g_norm_sq - out.diag.g_prev_sq;
  const double nl = ctx.nu * ctx.lambda1;

  // Energy estimate with the Poincare-reduced dissipation and the
  // sup-in-time forcing amplitude.
  out.row.stab_eq1_margin =
      dt * f_inf * f_inf / (2.0 * nl) -
      (g_diff + out.row.dissipation_sq + 0.5 * nl * dt * out.diag.stage_l2_sq);

  // Energy estimate keeping the full gradient dissipation and the
  // instantaneous forcing norm.
  out.row.gstab_nse1_margin =
      dt / (2.0 * nl) * out.diag.f_beta_norm * out.diag.f_beta_norm -
      (g_diff + out.row.dissipation_sq + 0.5 * ctx.nu * dt * out.diag.stage_grad_sq);

  if (ctx.cert != nullptr) {
    const double h11 = ctx.cert->h11, h22 = ctx.cert->h22, eps = ctx.cert->epsilon;
    out.row.h_norm_sq = h11 * l2_next + h22 * l2_curr;
    const double h_prev = h11 * l2_curr + h22 * l2_prev;
    out.row.l2bound0_margin =
        (h_prev + dt * f_inf * f_inf / (2.0 * nl)) / (1.0 + eps) - out.row.h_norm_sq;
  }
  if (!std::isnan(ctx.kappa2)) {
    const double a_prev = 0.25 * (1.0 + theta) * grad_curr +
                          0.25 * (1.0 - theta) * spectral2d::grad_norm_sq(s.u_prev);
    out.row.h1_ineq2_margin =
        ctx.kappa2 * a_prev + dt / ctx.nu * f_inf * f_inf - out.row.A_n;
  }

  out.state.u_prev = s.u_curr;
  out.state.u_curr = std::move(u_next);
  out.state.t_curr = s.t_curr + dt;
  out.state.index_curr = s.index_curr + 1;
  return out;
}

/// Bootstrap result: the first solution level plus solver diagnostics.
struct BootstrapResult {
  VelocityField u1;
  int iters = 0;
  double residual = 0.0;
};

/// Produces u_1 from u_0 with one implicit-midpoint step:
///   (2/dt)(w - u_0) + nu*A w + P[(w.grad)w] = P f(t_0 + dt/2),  u_1 = 2w - u_0.
/// Unconditionally energy-stable: ||u_1|| <= ||u_0|| when f = 0.
inline BootstrapResult bootstrap_first_step(const VelocityField& u0, double nu, double dt,
                                            const Forcing& forcing, double t0,
                                            const SolverPolicy& pol) {
  const double sigma = 2.0 / dt;
  const VelocityField f_mid = forcing.at(t0 + 0.5 * dt);
  const VelocityField rhs_lin = f_mid + sigma * u0;
  detail::StageSolve sol = detail::solve_fixed_point(rhs_lin, sigma, nu, u0, pol);
  BootstrapResult out;
  out.u1 = 2.0 * sol.v - u0;
  out.iters = sol.iters;
  out.residual = sol.residual;
  return out;
}

/// How the second starting level is obtained.
enum class Bootstrap { given, midpoint };

/// Full simulation configuration.  u0 is required; u1 is used only with
/// Bootstrap::given.
struct SimulationConfig {
  TorusGrid grid;
  double theta = 0.5;
  double nu = 0.0;
  double dt = 0.0;
  int64_t steps = 0;  ///< number of two-leg steps (produces u_2 .. u_{steps+1})
  double t0 = 0.0;
  Forcing forcing;
  VelocityField u0;
  VelocityField u1;
  Bootstrap bootstrap = Bootstrap::midpoint;
  SolverPolicy solver;
  bool allow_inadmissible = false;  ///< diagnostic mode: run above the step-size limit
  double blowup_factor = 1e6;      ///< abort when ||u||^2 exceeds this multiple of the start
  double r_window = -1.0;          ///< window length; <= 0 selects 5.25x the step-size limit
  double c_omega = 1.0;
  bool check_attractor = false;    ///< require a finite absorbing-ball entry time
  int64_t snapshot_every = 0;      ///< call snapshot_sink every this many steps (0 = never)
  std::function<void(int64_t, const VelocityField&)> snapshot_sink;
};

/// Whole-run outcome: certificate/bounds actually used, all rows, and the
/// worst observed margin of every tracked inequality (margins are
/// RHS - LHS; +inf means the check never became active).
struct SimulationResult {
  std::optional<certificate::HCertificate> cert;
  std::optional<bounds::L2Constants> l2;
  std::optional<bounds::H1Constants> h1;
  double lambda1 = 0.0;
  double g1 = 0.0;       ///< weighted energy of the starting pair (u_1, u_0)
  double a1_start = 0.0; ///< weighted gradient energy of the starting pair
  int bootstrap_iters = 0;
  double bootstrap_residual = 0.0;
  int64_t steps_completed = 0;
  double final_time = 0.0;
  VelocityField u_final, u_prev_final;
  std::vector<LedgerRow> rows;

  // Worst per-row margins.
  double worst_stab_eq1 = kInf;
  double worst_gstab_nse1 = kInf;
  double worst_l2bound0 = kInf;
  double worst_h1_ineq2 = kInf;

  // Cumulative-inequality worst margins.
  double worst_cumulative_dissipation = kInf;  ///< summed energy estimate vs 2*G_1 + horizon forcing
  double worst_l2h1_margin = kInf;             ///< summed enstrophy budget, identity form
  double l2h1_display_variant_worst = kInf;    ///< same with difference-gradient terms (informational)
  double budget_max_rel_drift = 0.0;           ///< exact discrete energy identity drift

  // Uniform-in-time checks.
  double worst_k2_margin = kInf;    ///< K2 - ||u_N||, N >= 2
  double worst_rho0_margin = kInf;  ///< 2*rho0 - ||u_N||^2 once past the entry time
  bool rho0_check_active = false;
  double worst_k3_margin = kInf;    ///< K3((N-1)dt) - A_N per row
  double worst_rho2_margin = kInf;  ///< rho2 - A_N once past T* + r
  bool rho2_check_active = false;
  double uniform_limit = kNaN;      ///< min of the three step-size ceilings
  bool dt_below_uniform_limit = false;
};

/// Runs a full simulation.  Rows are streamed to row_sink (if given) as
/// they are produced, so a partial ledger survives mid-run failures; they
/// are also collected in the result.
inline SimulationResult run_simulation(const SimulationConfig& cfg,
                                       const std::function<void(const LedgerRow&)>& row_sink = {}) {
  spectral2d::validate_grid(cfg.grid);
  const double lambda1 = spectral2d::stokes_lambda1(cfg.grid);
  const auto coeff = dln::core::make_coefficients(cfg.theta);
  const double theta = cfg.theta;

  SimulationResult res;
  res.lambda1 = lambda1;

  if (!cfg.allow_inadmissible) {
    res.cert = certificate::build_certificate({theta, cfg.nu, lambda1, cfg.dt});
  } else {
    // Diagnostic mode: tolerate any positive step size; certificate-based
    // columns stay NaN.  Still reject nonsense inputs.
    certificate::validate_positive(cfg.dt, "dt");
    certificate::validate_positive(cfg.nu, "nu");
  }

  // --- Starting pair -----------------------------------------------------
  StepState state;
  state.u_prev = cfg.u0;
  if (cfg.bootstrap == Bootstrap::given) {
    state.u_curr = cfg.u1;
  } else {
    BootstrapResult boot =
        bootstrap_first_step(cfg.u0, cfg.nu, cfg.dt, cfg.forcing, cfg.t0, cfg.solver);
    state.u_curr = std::move(boot.u1);
    res.bootstrap_iters = boot.iters;
    res.bootstrap_residual = boot.residual;
  }
  state.t_curr = cfg.t0 + cfg.dt;
  state.index_curr = 1;

  const double l2_u0 = spectral2d::l2_norm_sq(cfg.u0);
  const double l2_u1 = spectral2d::l2_norm_sq(state.u_curr);
  const double grad_u0 = spectral2d::grad_norm_sq(cfg.u0);
  const double grad_u1 = spectral2d::grad_norm_sq(state.u_curr);
  res.g1 = 0.25 * (1.0 + theta) * l2_u1 + 0.25 * (1.0 - theta) * l2_u0;
  res.a1_start = 0.25 * (1.0 + theta) * grad_u1 + 0.25 * (1.0 - theta) * grad_u0;

  // --- Bound constants ----------------------------------------------------
  std::optional<bounds::K3Inputs> k3in;
  double kappa2 = kNaN;
  if (res.cert) {
    res.l2 = bounds::l2_constants(*res.cert, std::sqrt(l2_u0), std::sqrt(l2_u1),
                                  cfg.forcing.f_inf);
    if (cfg.check_attractor) bounds::require_finite_t_star(*res.l2);
    const double c_dt = certificate::max_timestep(theta, cfg.nu, lambda1);
    const double r_window = cfg.r_window > 0.0 ? cfg.r_window : 5.25 * c_dt;
    const double horizon = static_cast<double>(cfg.steps) * cfg.dt;
    res.h1 = bounds::h1_constants(*res.cert, *res.l2, res.a1_start, std::sqrt(grad_u0),
                                  std::sqrt(grad_u1), cfg.forcing.f_inf, r_window, res.g1,
                                  horizon, cfg.c_omega);
    kappa2 = res.h1->kappa2;
    k3in = bounds::K3Inputs{res.a1_start, res.g1,      cfg.forcing.f_inf, cfg.nu,
                            res.h1->kappa1, res.h1->kappa2, c_dt};
    // K6 or rho3 can underflow to zero (or NaN) when their K5/rho1
    // prefactors overflow; the usable step-size ceiling is then zero and
    // the long-time gradient check stays inactive.
    if (res.h1->K6 > 0.0 && res.h1->rho3 > 0.0) {
      res.uniform_limit = bounds::uniform_timestep_limit(c_dt, res.h1->K6, res.h1->rho3);
    } else {
      res.uniform_limit = 0.0;
    }
    res.dt_below_uniform_limit = res.uniform_limit > 0.0 && cfg.dt < res.uniform_limit;
  }

  StepContext ctx;
  ctx.coeff = coeff;
  ctx.nu = cfg.nu;
  ctx.dt = cfg.dt;
  ctx.lambda1 = lambda1;
  ctx.forcing = &cfg.forcing;
  ctx.solver = cfg.solver;
  ctx.cert = res.cert ? &*res.cert : nullptr;
  ctx.kappa2 = kappa2;

  // --- Cumulative accumulators --------------------------------------------
  const double f_inf = cfg.forcing.f_inf;
  const double nl = cfg.nu * lambda1;
  const double b2 = coeff.beta[2], b1 = coeff.beta[1], b0 = coeff.beta[0];
  const double tb = 2.0 * b2 - 1.0;
  const double beta_sq = b0 * b0 + b1 * b1;

  double sum_stage_grad = 0.0;   // sum ||grad v||^2
  double sum_dissipation = 0.0;  // sum of dissipation-combination norms
  double sum_forcing_work = 0.0; // sum dt*(f, v)
  double sum_l2h1_grad = 0.0;    // sum ||grad u_{j+1}||^2
  double sum_l2h1_l2diff = 0.0;  // sum of L2 difference terms
  double sum_l2h1_gradsum = 0.0; // sum of gradient-sum terms (identity form)
  double sum_l2h1_graddiff = 0.0;// sum of gradient-difference terms (display variant)

  // Summed enstrophy budget, closed-form RHS:
  //   RHS_N = ic_coef*G_1 + starting boundary terms + (N-1)*dt*f_inf^2*force_coef.
  const double l2h1_start = cfg.dt * cfg.nu *
                            (0.25 * grad_u1 + (0.5 * b0 + tb / 8.0) * grad_u0);
  double l2h1_rhs_const = kNaN;
  double l2h1_force_coef = 0.0;
  if (res.l2) {
    const double k2p4 = std::pow(res.l2->K2, 4);
    const double ic_coef = 1.0 + k2p4 * beta_sq * beta_sq / (std::pow(cfg.nu, 4) * tb * tb * tb);
    l2h1_rhs_const = ic_coef * res.g1 + l2h1_start;
    l2h1_force_coef = (2.0 + k2p4 * beta_sq * beta_sq /
                                 (2.0 * std::pow(cfg.nu, 4) * tb * tb)) /
                      (cfg.nu * tb * lambda1);
  }

  const double blowup_ceiling = cfg.blowup_factor * std::max(l2_u0, 1e-30);

  auto emit = [&](const LedgerRow& row) {
    if (row_sink) row_sink(row);
    res.rows.push_back(row);
  };

  auto track_min = [](double& worst, double value) {
    if (!std::isnan(value)) worst = std::min(worst, value);
  };

  // --- Main loop ------------------------------------------------------------
  for (int64_t n = 0; n < cfg.steps; ++n) {
    AdvanceOutcome out = advance(state, ctx);
    state = std::move(out.state);
    const LedgerRow& row = out.row;
    const StepDiagnostics& d = out.diag;
    emit(row);
    res.steps_completed = n + 1;

    track_min(res.worst_stab_eq1, row.stab_eq1_margin);
    track_min(res.worst_gstab_nse1, row.gstab_nse1_margin);
    track_min(res.worst_l2bound0, row.l2bound0_margin);
    track_min(res.worst_h1_ineq2, row.h1_ineq2_margin);

    // Cumulative dissipation estimate: nu*dt*sum ||grad v||^2 over steps
    // so far must stay below 2*G_1 + (#steps)*dt/(nu*lambda1)*f_inf^2.
    sum_stage_grad += d.stage_grad_sq;
    const double steps_so_far = static_cast<double>(n + 1);
    track_min(res.worst_cumulative_dissipation,
              2.0 * res.g1 + steps_so_far * cfg.dt / nl * f_inf * f_inf -
                  cfg.nu * cfg.dt * sum_stage_grad);

    // Exact discrete energy identity: G_N + sum diss + nu*dt*sum||grad v||^2
    //                                 = G_1 + sum dt*(f, v).
    sum_dissipation += row.dissipation_sq;
    sum_forcing_work += cfg.dt * d.f_dot_stage;
    {
      const double lhs = row.g_norm_sq + sum_dissipation + cfg.nu * cfg.dt * sum_stage_grad;
      const double drift = std::abs(lhs - res.g1 - sum_forcing_work) /
                           std::max(res.g1, 1e-300);
      res.budget_max_rel_drift = std::max(res.budget_max_rel_drift, drift);
    }

    // Summed enstrophy budget (identity form plus closed-form RHS).
    sum_l2h1_grad += row.grad_sq;
    sum_l2h1_l2diff += 0.5 * theta * d.diff1_sq + 0.25 * (1.0 - theta) * d.diff0_sq;
    sum_l2h1_gradsum += cfg.nu * cfg.dt * (0.5 * b1 * d.sum1_grad_sq + 0.5 * b0 * d.sum0_grad_sq);
    sum_l2h1_graddiff +=
        cfg.nu * cfg.dt * (0.5 * b1 * d.diff1_grad_sq + 0.5 * b0 * d.diff0_grad_sq);
    if (res.l2) {
      const double grad_second = (n == 0) ? grad_u1 : res.rows[res.rows.size() - 2].grad_sq;
      const double boundary =
          cfg.dt * cfg.nu * (0.25 * row.grad_sq + (0.5 * b0 + tb / 8.0) * grad_second);
      const double running = cfg.dt * cfg.nu * tb / 8.0 * sum_l2h1_grad;
      const double lhs_common = row.g_norm_sq + boundary + running + sum_l2h1_l2diff;
      const double rhs = l2h1_rhs_const + steps_so_far * cfg.dt * f_inf * f_inf * l2h1_force_coef;
      track_min(res.worst_l2h1_margin, rhs - (lhs_common + sum_l2h1_gradsum));
      track_min(res.l2h1_display_variant_worst, rhs - (lhs_common + sum_l2h1_graddiff));
    }

    // Uniform-in-time checks.
    if (res.l2) {
      track_min(res.worst_k2_margin, res.l2->K2 - std::sqrt(row.l2_sq));
      const double elapsed_rows = static_cast<double>(row.step_index - 1) * cfg.dt;
      if (res.l2->rho0 > 0.0 && elapsed_rows > res.l2->T_star) {
        res.rho0_check_active = true;
        track_min(res.worst_rho0_margin, 2.0 * res.l2->rho0 - row.l2_sq);
      }
      if (k3in) {
        track_min(res.worst_k3_margin, bounds::k3_at(*k3in, elapsed_rows) - row.A_n);
      }
      if (res.h1 && res.dt_below_uniform_limit && res.l2->T_star < kInf) {
        const double elapsed2 = static_cast<double>(row.step_index - 2) * cfg.dt;
        if (elapsed2 > res.l2->T_star + res.h1->r) {
          res.rho2_check_active = true;
          track_min(res.worst_rho2_margin, res.h1->rho2 - row.A_n);
        }
      }
    }

    if (row.l2_sq > blowup_ceiling) {
      throw BlowUp("solution energy " + format_g17(row.l2_sq) + " exceeded " +
                   format_g17(cfg.blowup_factor) + " times the initial energy at step " +
                   std::to_string(row.step_index));
    }
    if (cfg.snapshot_every > 0 && cfg.snapshot_sink &&
        row.step_index % cfg.snapshot_every == 0) {
      cfg.snapshot_sink(row.step_index, state.u_curr);
    }
  }

  res.final_time = state.t_curr;
  res.u_final = std::move(state.u_curr);
  res.u_prev_final = std::move(state.u_prev);
  return res;
}

}  // namespace dln::stepper
