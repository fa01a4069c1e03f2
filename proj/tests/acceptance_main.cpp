/// Acceptance gate for the library: nine go/no-go checks covering the
/// algebraic identities, the certificate engine, the Gronwall lemmas, the
/// per-step and cumulative energy ledgers, the uniform-in-time bounds, the
/// temporal convergence order, and the exact discrete energy budget.
///
/// Prints exactly one line per criterion:
///   C<k> PASS <what was checked, worst observed numbers> (<seconds>)
///   C<k> FAIL <first violation or exception> (<seconds>)
/// and exits with the number of failed criteria.  No test framework: this
/// binary is the go/no-go record, meant to be run (and read) as a whole.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "dln/bounds.hpp"
#include "dln/certificate.hpp"
#include "dln/gstability.hpp"
#include "dln/method.hpp"
#include "dln/spectral2d.hpp"
#include "dln/stepper.hpp"
#include "dln/vecspace.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class... Args>
std::string strf(const char* fmt, Args... args) {
  char buf[768];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return std::string(buf);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Runs one criterion, times it, catches everything, prints the line.
/// time_limit_s <= 0 means the criterion has no runtime requirement.
bool report(int id, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = seconds_since(t0);
  if (out.pass && time_limit_s > 0.0 && secs >= time_limit_s) {
    out.pass = false;
    out.detail += strf("; runtime %.2fs exceeded the %.0fs limit", secs, time_limit_s);
  }
  std::printf("C%d %s %s (%.2fs)\n", id, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
  std::fflush(stdout);
  return out.pass;
}

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// C1: the three algebraic identities, random triples, residual <= 1e-12 x
// the largest participating term.  9 theta values x {4, 64, 4096} x 100.
// ---------------------------------------------------------------------------
Outcome criterion1() {
  using dln::core::RVec;
  using dln::core::StateTriple;
  const std::array<int, 3> dims{4, 64, 4096};
  const double tol = 1e-12;
  double worst = 0.0;  // max |residual| / scale seen anywhere
  long triples = 0;

  for (int ti = 1; ti <= 9; ++ti) {
    const double theta = 0.1 * ti;
    const auto c = dln::core::make_coefficients(theta);
    for (int dim : dims) {
      std::mt19937_64 gen(0x1DEA5ull * 1000 + ti * 131 + dim);
      for (int rep = 0; rep < 100; ++rep) {
        StateTriple<RVec> t{RVec(static_cast<size_t>(dim)), RVec(static_cast<size_t>(dim)),
                            RVec(static_cast<size_t>(dim))};
        for (int i = 0; i < dim; ++i) {
          t.y_prev[static_cast<size_t>(i)] = 2.0 * uniform01(gen) - 1.0;
          t.y_curr[static_cast<size_t>(i)] = 2.0 * uniform01(gen) - 1.0;
          t.y_next[static_cast<size_t>(i)] = 2.0 * uniform01(gen) - 1.0;
        }
        ++triples;

        // Shared terms.
        const RVec acomb = combine_alpha(t, c);
        const RVec bcomb = combine_beta(t, c);
        const RVec dcomb = combine_dissip(t, c);
        const double g_new = dln::core::g_norm_sq(t.y_next, t.y_curr, theta);
        const double g_old = dln::core::g_norm_sq(t.y_curr, t.y_prev, theta);

        // Identity 1: G-stability form.
        {
          const double scale = std::max({std::abs(inner(acomb, bcomb)), g_new, g_old,
                                         inner(dcomb, dcomb)});
          const double r = dln::core::g_stability_residual(t, theta);
          worst = std::max(worst, std::abs(r) / scale);
          if (!(std::abs(r) <= tol * scale)) {
            return {false, strf("G-stability residual %.3e > 1e-12*%.3e at theta=%.1f dim=%d",
                                r, scale, theta, dim)};
          }
        }
        // Identity 2: alpha-combination against the newest state.
        {
          const RVec d1 = t.y_next - t.y_curr;
          const RVec d2 = t.y_next - t.y_prev;
          const double scale =
              std::max({std::abs(inner(acomb, t.y_next)), g_new, g_old,
                        theta / 2.0 * inner(d1, d1), (1.0 - theta) / 4.0 * inner(d2, d2)});
          const double r = dln::core::identity1_residual(t, theta);
          worst = std::max(worst, std::abs(r) / scale);
          if (!(std::abs(r) <= tol * scale)) {
            return {false, strf("first auxiliary residual %.3e > 1e-12*%.3e at theta=%.1f dim=%d",
                                r, scale, theta, dim)};
          }
        }
        // Identity 3: beta-combination against the newest state.
        {
          const double b0 = c.beta[0], b1 = c.beta[1];
          const double nn = inner(t.y_next, t.y_next);
          const double nc = inner(t.y_curr, t.y_curr);
          const double np = inner(t.y_prev, t.y_prev);
          const RVec s1 = t.y_next + t.y_curr;
          const RVec s2 = t.y_next + t.y_prev;
          const double scale = std::max({std::abs(inner(bcomb, t.y_next)),
                                         std::abs(c.two_beta2_minus_one() * nn),
                                         (b0 + b1) / 2.0 * nn + b0 / 2.0 * nc,
                                         (b0 + b1) / 2.0 * nc + b0 / 2.0 * np,
                                         b1 / 2.0 * inner(s1, s1), b0 / 2.0 * inner(s2, s2)});
          const double r = dln::core::identity2_residual(t, theta);
          worst = std::max(worst, std::abs(r) / scale);
          if (!(std::abs(r) <= tol * scale)) {
            return {false, strf("second auxiliary residual %.3e > 1e-12*%.3e at theta=%.1f dim=%d",
                                r, scale, theta, dim)};
          }
        }
      }
    }
  }
  return {true, strf("identity residuals: worst %.2e of the 1e-12 allowance over %ld triples, "
                     "9 theta values, dims {4,64,4096}",
                     worst, triples)};
}

// ---------------------------------------------------------------------------
// C2: certificate over the full admissible grid (nu = lambda1 = 1):
// 19 theta values x 10 step-size fractions; all six equation residuals
// <= 1e-10 relative, weights above their floors, 0 < epsilon < 4,
// x < nu*dt*lambda1/4.
// ---------------------------------------------------------------------------
Outcome criterion2() {
  namespace cert = dln::certificate;
  double worst_rel = 0.0;
  int built = 0;
  for (int it = 1; it <= 19; ++it) {
    const double theta = 0.05 * it;
    const double limit = cert::max_timestep(theta, 1.0, 1.0);
    for (int jf = 0; jf < 10; ++jf) {
      const double dt = (0.05 + 0.1 * jf) * limit;
      const cert::CertificateInput in{theta, 1.0, 1.0, dt};
      const cert::HCertificate hc = cert::build_certificate(in);
      ++built;
      const cert::SystemResiduals res = cert::system_residuals(hc, in);
      for (int eq = 0; eq < 6; ++eq) {
        const double rel = std::abs(res.residual[static_cast<size_t>(eq)]) /
                           res.scale[static_cast<size_t>(eq)];
        worst_rel = std::max(worst_rel, rel);
        if (!(rel <= 1e-10)) {
          return {false, strf("equation %d relative residual %.3e > 1e-10 at theta=%.2f "
                              "dt=%.6f", eq, rel, theta, dt)};
        }
      }
      const double m = dt;  // nu = lambda1 = 1
      if (!(hc.h11 > cert::h11_floor(theta)) || !(hc.h22 > cert::h22_floor(theta))) {
        return {false, strf("weight floor violated at theta=%.2f dt=%.6f", theta, dt)};
      }
      if (!(hc.epsilon > 0.0 && hc.epsilon < 4.0)) {
        return {false, strf("epsilon=%.6f outside (0,4) at theta=%.2f dt=%.6f",
                            hc.epsilon, theta, dt)};
      }
      if (!(hc.x < m / 4.0)) {
        return {false, strf("x=%.6e not below m/4=%.6e at theta=%.2f dt=%.6f",
                            hc.x, m / 4.0, theta, dt)};
      }
      if (!cert::bound_flags(hc).all()) {
        return {false, strf("qualitative flag failed at theta=%.2f dt=%.6f", theta, dt)};
      }
    }
  }
  return {true, strf("%d certificates on the 19x10 admissible grid: worst relative residual "
                     "%.2e (allowance 1e-10), all floors/sign conditions hold",
                     built, worst_rel)};
}

// ---------------------------------------------------------------------------
// C3: both discrete Gronwall lemmas dominate brute-force recursions on
// 1000 randomized instances each.
// ---------------------------------------------------------------------------
Outcome criterion3() {
  namespace bd = dln::bounds;
  double worst_ratio_a = 0.0, worst_ratio_b = 0.0;

  // Plain lemma: xi_n <= xi_{n-1}*(1 + k*eta_{n-1}) + k*zeta_n.
  {
    std::mt19937_64 gen(90210);
    for (int inst = 0; inst < 1000; ++inst) {
      const int n = 1 + static_cast<int>(uniform01(gen) * 50.0);
      bd::GronwallInput in;
      in.k = 1e-3 + uniform01(gen);
      in.xi0 = 10.0 * uniform01(gen);
      in.eta.resize(static_cast<size_t>(n));
      for (double& e : in.eta) e = 2.0 * uniform01(gen);
      in.zeta.assign(static_cast<size_t>(n) + 1, 0.0);
      for (int i = 1; i <= n; ++i) in.zeta[static_cast<size_t>(i)] = 5.0 * uniform01(gen);

      const double bound = bd::gronwall_bound(in);
      double xi = in.xi0;
      for (int i = 1; i <= n; ++i) {
        xi = xi * (1.0 + in.k * in.eta[static_cast<size_t>(i - 1)]) +
             in.k * in.zeta[static_cast<size_t>(i)];
      }
      worst_ratio_a = std::max(worst_ratio_a, xi / std::max(bound, 1e-300));
      if (!(xi <= bound * (1.0 + 1e-12))) {
        return {false, strf("plain lemma violated on instance %d: xi=%.6e > bound=%.6e",
                            inst, xi, bound)};
      }
    }
  }

  // Sliding-window lemma with conservative hypotheses: full-range sums for
  // the eta/zeta budgets, the worst window for the xi budget.
  {
    std::mt19937_64 gen(424242);
    for (int inst = 0; inst < 1000; ++inst) {
      const int n_star = 5 + static_cast<int>(uniform01(gen) * 56.0);
      int n1 = static_cast<int>(uniform01(gen) * static_cast<double>(n_star - 1));
      n1 = std::min(n1, n_star - 2);
      const int n2_max = n_star - n1 - 1;
      int n2 = 1 + static_cast<int>(uniform01(gen) * static_cast<double>(n2_max));
      n2 = std::min(n2, n2_max);
      const double k = 0.01 + 0.99 * uniform01(gen);

      std::vector<double> eta(static_cast<size_t>(n_star));
      std::vector<double> zeta(static_cast<size_t>(n_star) + 1, 0.0);
      std::vector<double> xi(static_cast<size_t>(n_star) + 1, 0.0);
      for (double& e : eta) e = 0.5 * uniform01(gen);
      for (int i = 1; i <= n_star; ++i) zeta[static_cast<size_t>(i)] = 2.0 * uniform01(gen);
      xi[0] = 3.0 * uniform01(gen);
      for (int i = 1; i <= n_star; ++i) {
        xi[static_cast<size_t>(i)] =
            xi[static_cast<size_t>(i - 1)] * (1.0 + k * eta[static_cast<size_t>(i - 1)]) +
            k * zeta[static_cast<size_t>(i)];
      }

      double a1 = 0.0, a2 = 0.0;
      for (int i = n1; i < n_star; ++i) a1 += k * eta[static_cast<size_t>(i)];
      for (int i = std::max(n1, 1); i <= n_star; ++i) a2 += k * zeta[static_cast<size_t>(i)];
      double a3 = 0.0;
      for (int s = n1; s + n2 <= n_star - 1; ++s) {
        double w = 0.0;
        for (int i = s; i <= s + n2; ++i) w += k * xi[static_cast<size_t>(i)];
        a3 = std::max(a3, w);
      }

      const double bound = bd::uniform_gronwall_bound(n1, n2, n_star, a1, a2, a3, k);
      for (int n = n1 + n2 + 1; n <= n_star; ++n) {
        const double val = xi[static_cast<size_t>(n)];
        worst_ratio_b = std::max(worst_ratio_b, val / std::max(bound, 1e-300));
        if (!(val <= bound * (1.0 + 1e-12))) {
          return {false, strf("window lemma violated on instance %d at n=%d: xi=%.6e > "
                              "bound=%.6e", inst, n, val, bound)};
        }
      }
    }
  }
  return {true, strf("both lemmas dominate 1000 randomized recursions each: worst "
                     "value/bound ratios %.4f (plain) and %.4f (window)",
                     worst_ratio_a, worst_ratio_b)};
}

// ---------------------------------------------------------------------------
// Simulation jobs shared by C4-C7 and C9.
// ---------------------------------------------------------------------------
struct SimJob {
  dln::stepper::SimulationResult res;
  double secs = 0.0;
};

SimJob run_job(dln::stepper::SimulationConfig cfg) {
  const auto t0 = Clock::now();
  SimJob job;
  job.res = dln::stepper::run_simulation(cfg);
  job.secs = seconds_since(t0);
  return job;
}

}  // namespace

int main() {
  namespace sp = dln::spectral2d;
  namespace st = dln::stepper;
  namespace cert = dln::certificate;

  std::printf("acceptance suite: 9 criteria\n");
  std::fflush(stdout);

  int failures = 0;
  const auto add = [&failures](bool ok) { failures += ok ? 0 : 1; };

  // Fast, purely algebraic criteria first (timed without background load).
  add(report(1, 5.0, criterion1));
  add(report(2, 1.0, criterion2));
  add(report(3, 5.0, criterion3));

  // Launch the long simulations concurrently; collect them in order below.
  const sp::TorusGrid grid64{64, 2.0 * M_PI};
  const sp::TorusGrid grid32{32, 2.0 * M_PI};
  const double lam64 = sp::stokes_lambda1(grid64);
  const double half_limit = 0.5 * cert::max_timestep(0.5, 0.1, lam64);

  // Forced 64^2 run for the per-step energy law and the cumulative budgets.
  st::SimulationConfig cfg_a;
  cfg_a.grid = grid64;
  cfg_a.theta = 0.5;
  cfg_a.nu = 0.1;
  cfg_a.dt = half_limit;
  cfg_a.steps = 5000;
  cfg_a.forcing = sp::make_forcing(grid64, "tg", 1e-3, 0.1);
  cfg_a.u0 = sp::random_divfree(grid64, 2024, 0.01);
  cfg_a.solver.tol = 1e-11;
  cfg_a.solver.max_iter = 300;
  std::shared_future<SimJob> fut_a =
      std::async(std::launch::async, [cfg_a] { return run_job(cfg_a); }).share();

  // Same dynamics, two starting fields 100x apart in norm, constant forcing.
  auto make_cfg_b = [&](double ic_l2) {
    st::SimulationConfig c;
    c.grid = grid64;
    c.theta = 0.5;
    c.nu = 0.1;
    c.dt = half_limit;
    c.steps = 1500;
    c.forcing = sp::make_forcing(grid64, "tg", 1e-3, 0.0);
    c.u0 = sp::random_divfree(grid64, 2025, ic_l2);
    c.solver.tol = 1e-11;
    c.solver.max_iter = 400;
    return c;
  };
  auto fut_b_big = std::async(std::launch::async,
                              [cfg = make_cfg_b(0.2)] { return run_job(cfg); });
  auto fut_b_small = std::async(std::launch::async,
                                [cfg = make_cfg_b(0.002)] { return run_job(cfg); });

  // Gradient-energy run: step size below the uniform ceiling, horizon past
  // the absorbing-ball entry time plus one window length.  Two passes: a
  // zero-step run first to read the entry time and the window, then the
  // full run sized from them.
  struct GradientJob {
    SimJob job;
    double t_star = 0.0, r = 0.0, uniform_limit = 0.0;
    int64_t steps = 0;
  };
  auto fut_c = std::async(std::launch::async, [&]() -> GradientJob {
    st::SimulationConfig cfg;
    cfg.grid = grid64;
    cfg.theta = 0.5;
    cfg.nu = 0.1;
    cfg.dt = 0.06;
    cfg.steps = 0;
    cfg.forcing = sp::make_forcing(grid64, "tg", 1e-4, 0.0);
    cfg.u0 = sp::random_divfree(grid64, 7, 0.01);
    cfg.solver.tol = 1e-11;
    cfg.solver.max_iter = 200;

    GradientJob out;
    const st::SimulationResult probe = st::run_simulation(cfg);
    out.t_star = probe.l2->T_star;
    out.r = probe.h1->r;
    out.uniform_limit = probe.uniform_limit;
    if (!probe.dt_below_uniform_limit) {
      throw std::runtime_error(strf("step size %.4f is not below the uniform ceiling %.6e",
                                    cfg.dt, probe.uniform_limit));
    }
    out.steps = static_cast<int64_t>(std::ceil((out.t_star + out.r) / cfg.dt)) + 10;
    cfg.steps = out.steps;
    out.job = run_job(cfg);
    return out;
  });

  // Unforced decay for the exact discrete energy budget.
  st::SimulationConfig cfg_d;
  cfg_d.grid = grid32;
  cfg_d.theta = 0.5;
  cfg_d.nu = 0.5;
  cfg_d.dt = 0.01;
  cfg_d.steps = 2000;
  cfg_d.forcing = sp::make_forcing(grid32, "none", 0.0, 0.0);
  cfg_d.u0 = sp::taylor_green(grid32, 1.0);
  cfg_d.solver.tol = 1e-13;
  cfg_d.solver.max_iter = 100;
  auto fut_d = std::async(std::launch::async, [cfg_d] { return run_job(cfg_d); });

  // C4: per-step energy law on the forced run.
  add(report(4, 0.0, [&]() -> Outcome {
    const SimJob& job = fut_a.get();
    const st::SimulationResult& r = job.res;
    const double scale = std::max(1.0, r.g1);
    const double allow = -1e-10 * scale;
    const bool ok = r.rows.size() == 5000 && r.worst_stab_eq1 >= allow &&
                    r.worst_gstab_nse1 >= allow && r.worst_l2bound0 >= allow;
    return {ok, strf("forced 64^2 run, 5000 steps at half the admissible step: worst margins "
                     "%.3e (energy), %.3e (gradient form), %.3e (contraction) vs allowance "
                     "%.1e; solve %.1fs",
                     r.worst_stab_eq1, r.worst_gstab_nse1, r.worst_l2bound0, allow, job.secs)};
  }));

  // C5: uniform energy bound, starting-data independence of the ball.
  add(report(5, 0.0, [&]() -> Outcome {
    const SimJob big = fut_b_big.get();
    const SimJob small = fut_b_small.get();
    const st::SimulationResult& ra = big.res;
    const st::SimulationResult& rb = small.res;
    const double allow_k2 =
        -1e-12 * std::max({1.0, ra.l2->K2, rb.l2->K2});
    const double allow_rho0 = -1e-12 * std::max(1.0, 2.0 * ra.l2->rho0);
    const bool same_ball = ra.l2->rho0 == rb.l2->rho0;  // bit-equal: same certificate, same forcing
    const bool ok = ra.rows.size() == 1500 && rb.rows.size() == 1500 &&
                    ra.worst_k2_margin >= allow_k2 && rb.worst_k2_margin >= allow_k2 &&
                    ra.rho0_check_active && rb.rho0_check_active &&
                    ra.worst_rho0_margin >= allow_rho0 && rb.worst_rho0_margin >= allow_rho0 &&
                    same_ball && ra.l2->K2 > rb.l2->K2;
    return {ok, strf("starting norms 0.2 and 0.002: energy-bound margins %.3e / %.3e, "
                     "ball margins %.3e / %.3e (entry times %.1f / %.1f, identical radius "
                     "rho0=%.3e); solve %.1fs + %.1fs",
                     ra.worst_k2_margin, rb.worst_k2_margin, ra.worst_rho0_margin,
                     rb.worst_rho0_margin, ra.l2->T_star, rb.l2->T_star, ra.l2->rho0,
                     big.secs, small.secs)};
  }));

  // C6: cumulative dissipation and summed-enstrophy budgets on the forced run.
  add(report(6, 0.0, [&]() -> Outcome {
    const SimJob& job = fut_a.get();
    const st::SimulationResult& r = job.res;
    const double scale = std::max(1.0, r.g1);
    const double allow = -1e-9 * scale;
    const bool ok = r.worst_cumulative_dissipation >= allow && r.worst_l2h1_margin >= allow;
    return {ok, strf("running sums over the full 5000-step horizon: worst margins %.3e "
                     "(dissipation budget), %.3e (summed enstrophy) vs allowance %.1e",
                     r.worst_cumulative_dissipation, r.worst_l2h1_margin, allow)};
  }));

  // C7: gradient-energy ledger: per-step recursion, finite-window bound,
  // long-time data-independent bound under the uniform step ceiling.
  add(report(7, 0.0, [&]() -> Outcome {
    const GradientJob g = fut_c.get();
    const st::SimulationResult& r = g.job.res;
    const double scale = std::max(1.0, r.a1_start);
    const double allow = -1e-12 * scale;
    const bool ok = r.dt_below_uniform_limit && r.rho2_check_active &&
                    r.worst_h1_ineq2 >= allow && r.worst_k3_margin >= allow &&
                    r.worst_rho2_margin >= allow;
    return {ok, strf("%lld steps at dt=0.06 (ceiling %.4f), entry time %.1f, window %.1f: "
                     "worst margins %.3e (per-step recursion), %.3e (finite window), "
                     "%.3e (long-time) vs allowance %.1e; solve %.1fs",
                     static_cast<long long>(g.steps), g.uniform_limit, g.t_star, g.r,
                     r.worst_h1_ineq2, r.worst_k3_margin, r.worst_rho2_margin, allow,
                     g.job.secs)};
  }));

  // C8: temporal order on the exact decaying-vortex solution; four step
  // halvings from dt = 0.02; observed order from the finest pair.
  add(report(8, 120.0, [&]() -> Outcome {
    const double nu = 0.5;
    std::string summary = "orders at the finest step pair:";
    for (double theta : {0.2, 0.5, 0.8}) {
      std::array<double, 5> errs{};
      for (int j = 0; j < 5; ++j) {
        const double dt = 0.02 / static_cast<double>(1 << j);
        st::SimulationConfig cfg;
        cfg.grid = grid32;
        cfg.theta = theta;
        cfg.nu = nu;
        cfg.dt = dt;
        cfg.steps = std::llround(1.0 / dt) - 1;
        cfg.forcing = sp::make_forcing(grid32, "none", 0.0, 0.0);
        cfg.u0 = sp::taylor_green(grid32, 1.0);
        cfg.u1 = sp::taylor_green(grid32, sp::taylor_green_decay(grid32, nu, dt));
        cfg.bootstrap = st::Bootstrap::given;
        cfg.solver.tol = 1e-13;
        cfg.solver.max_iter = 50;
        const st::SimulationResult r = st::run_simulation(cfg);
        const sp::VelocityField exact =
            sp::taylor_green(grid32, sp::taylor_green_decay(grid32, nu, r.final_time));
        errs[static_cast<size_t>(j)] = std::sqrt(sp::l2_norm_sq(r.u_final - exact));
      }
      for (int j = 0; j < 4; ++j) {
        if (!(errs[static_cast<size_t>(j)] > errs[static_cast<size_t>(j + 1)])) {
          return {false, strf("errors not decreasing under refinement at theta=%.1f: "
                              "%.3e -> %.3e", theta, errs[static_cast<size_t>(j)],
                              errs[static_cast<size_t>(j + 1)])};
        }
      }
      if (!(errs[4] > 1e-12)) {
        return {false, strf("finest error %.3e at theta=%.1f is too close to roundoff "
                            "to measure an order", errs[4], theta)};
      }
      const double order = std::log2(errs[3] / errs[4]);
      summary += strf(" theta=%.1f -> %.3f (err %.2e -> %.2e);", theta, order, errs[0], errs[4]);
      if (!(order >= 1.8 && order <= 2.2)) {
        return {false, strf("observed order %.3f outside [1.8, 2.2] at theta=%.1f",
                            order, theta)};
      }
    }
    return {true, summary + " all inside [1.8, 2.2]"};
  }));

  // C9: exact discrete energy budget on unforced decay.
  add(report(9, 0.0, [&]() -> Outcome {
    const SimJob job = fut_d.get();
    const st::SimulationResult& r = job.res;
    const bool ok = r.rows.size() == 2000 && r.budget_max_rel_drift <= 1e-9;
    return {ok, strf("unforced decay, 2000 steps: final energy + dissipation + viscous "
                     "work re-sums the initial energy to %.3e relative (allowance 1e-9); "
                     "solve %.1fs",
                     r.budget_max_rel_drift, job.secs)};
  }));

  std::printf("acceptance: %d/9 criteria passed\n", 9 - failures);
  return failures;
}
