/// Command-line front-end: coefficient tables, stability certificates,
/// certificate sweeps, Navier-Stokes simulations with per-step energy
/// ledgers, temporal convergence studies, and Gronwall-lemma checks.
///
/// Exit codes: 0 success, 1 a checked inequality failed, 2 configuration
/// error (invalid or inadmissible parameters), 3 solver failure
/// (non-convergence or blow-up).

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dln/bounds.hpp"
#include "dln/certificate.hpp"
#include "dln/errors.hpp"
#include "dln/format.hpp"
#include "dln/gstability.hpp"
#include "dln/ledger_io.hpp"
#include "dln/method.hpp"
#include "dln/spectral2d.hpp"
#include "dln/stepper.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Flat key=value configuration with command-line overrides (overrides win).
// ---------------------------------------------------------------------------

using ConfigMap = std::map<std::string, std::string>;

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config file " + path + " line " + std::to_string(lineno) +
                                  ": expected key=value");
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return cfg;
}

void apply_overrides(ConfigMap& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value; got '" + kv + "'");
    }
    cfg[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
}

std::string cfg_str(const ConfigMap& cfg, const std::string& key, const std::string& dflt) {
  auto it = cfg.find(key);
  return it == cfg.end() ? dflt : it->second;
}

double cfg_num(const ConfigMap& cfg, const std::string& key, double dflt) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return dflt;
  try {
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not a number: '" + it->second + "'");
  }
}

int64_t cfg_int(const ConfigMap& cfg, const std::string& key, int64_t dflt) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return dflt;
  try {
    size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not an integer: '" + it->second +
                                "'");
  }
}

bool cfg_bool(const ConfigMap& cfg, const std::string& key, bool dflt) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return dflt;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

/// Resolves the output directory: relative paths land under
/// $DLN_OUTPUT_ROOT when that variable is set.
fs::path resolve_out_dir(const std::string& out) {
  fs::path p = out.empty() ? fs::path(".") : fs::path(out);
  const char* root = std::getenv("DLN_OUTPUT_ROOT");
  if (root != nullptr && *root != '\0' && p.is_relative()) {
    p = fs::path(root) / p;
  }
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// certify + sweep
// ---------------------------------------------------------------------------

void print_certificate_report(std::ostream& os, const dln::certificate::HCertificate& cert) {
  const auto res = dln::certificate::system_residuals(cert, cert.input);
  const auto flags = dln::certificate::bound_flags(cert);
  auto kv = [&os](const std::string& k, const std::string& v) { os << k << "=" << v << "\n"; };
  auto kvd = [&](const std::string& k, double v) { kv(k, dln::format_g17(v)); };
  auto kvb = [&](const std::string& k, bool v) { kv(k, v ? "true" : "false"); };

  kvd("theta", cert.input.theta);
  kvd("nu", cert.input.nu);
  kvd("lambda1", cert.input.lambda1);
  kvd("dt", cert.input.dt);
  kvd("max_timestep",
      dln::certificate::max_timestep(cert.input.theta, cert.input.nu, cert.input.lambda1));
  kvd("E", cert.E);
  kvd("F", cert.F);
  kvd("x", cert.x);
  kvd("disc_outer", cert.disc_outer);
  kvd("disc_inner", cert.disc_inner);
  kvd("a", cert.a);
  kvd("b", cert.b);
  kvd("c", cert.c);
  kvd("h11", cert.h11);
  kvd("h22", cert.h22);
  kvd("epsilon", cert.epsilon);
  kvd("B", cert.B);
  kvd("C", cert.C);
  kvd("mu", cert.mu());
  for (int i = 0; i < 6; ++i) {
    kvd("residual_" + std::to_string(i + 1), res.residual[static_cast<size_t>(i)]);
  }
  kvd("worst_relative_residual", res.worst_relative());
  kvd("h11_floor", dln::certificate::h11_floor(cert.input.theta));
  kvd("h22_floor", dln::certificate::h22_floor(cert.input.theta));
  kvd("c_h_eff", dln::certificate::c_h_eff(cert));
  kvd("c_eps_eff", dln::certificate::c_eps_eff(cert));
  kvd("c_eps_flag", dln::certificate::c_eps_flag(cert));
  kvb("flag_h11_above_floor", flags.h11_above_floor);
  kvb("flag_h22_above_floor", flags.h22_above_floor);
  kvb("flag_epsilon_below_four", flags.epsilon_below_four);
  kvb("flag_inv_epsilon_above_quarter", flags.inv_epsilon_above_quarter);
  kvb("flag_inv_epsilon_bounded", flags.inv_epsilon_bounded);
  kvb("flag_x_below_quarter_m", flags.x_below_quarter_m);
  kvb("flag_e_negative", flags.e_negative);
  kvb("flag_f_positive", flags.f_positive);
  kvb("all_flags_pass", flags.all());
}

int cmd_certify(double theta, double nu, double lambda1, double dt, const std::string& out) {
  const dln::certificate::HCertificate cert =
      dln::certificate::build_certificate({theta, nu, lambda1, dt});
  print_certificate_report(std::cout, cert);
  if (!out.empty()) {
    const fs::path dir = resolve_out_dir(out);
    std::ofstream f(dir / "certificate.txt");
    if (!f) throw std::runtime_error("cannot write certificate report");
    print_certificate_report(f, cert);
  }
  return dln::certificate::bound_flags(cert).all() ? 0 : 1;
}

const char* kSweepColumns =
    "theta,dt,E,F,x,disc_outer,disc_inner,a,b,c,h11,h22,epsilon,B,C,"
    "worst_relative_residual,all_flags_pass";

std::string sweep_row(double theta, double nu, double lambda1, double dt_frac) {
  const double dt = dt_frac * dln::certificate::max_timestep(theta, nu, lambda1);
  const auto cert = dln::certificate::build_certificate({theta, nu, lambda1, dt});
  const auto res = dln::certificate::system_residuals(cert, cert.input);
  const auto flags = dln::certificate::bound_flags(cert);
  std::ostringstream os;
  os << dln::format_g17(theta) << ',' << dln::format_g17(dt) << ',' << dln::format_g17(cert.E)
     << ',' << dln::format_g17(cert.F) << ',' << dln::format_g17(cert.x) << ','
     << dln::format_g17(cert.disc_outer) << ',' << dln::format_g17(cert.disc_inner) << ','
     << dln::format_g17(cert.a) << ',' << dln::format_g17(cert.b) << ','
     << dln::format_g17(cert.c) << ',' << dln::format_g17(cert.h11) << ','
     << dln::format_g17(cert.h22) << ',' << dln::format_g17(cert.epsilon) << ','
     << dln::format_g17(cert.B) << ',' << dln::format_g17(cert.C) << ','
     << dln::format_g17(res.worst_relative()) << ',' << (flags.all() ? "true" : "false");
  return os.str();
}

int cmd_sweep(const std::string& theta_grid, double dt_frac, double nu, double lambda1,
              const std::string& out) {
  // theta_grid is "start:stop:step".
  double start = 0, stop = 0, step = 0;
  {
    std::stringstream ss(theta_grid);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c, ':')) {
      throw std::invalid_argument("--theta-grid expects start:stop:step; got '" + theta_grid +
                                  "'");
    }
    start = std::stod(a);
    stop = std::stod(b);
    step = std::stod(c);
  }
  if (!(step > 0.0) || !(start > 0.0) || !(stop < 1.0) || start > stop) {
    throw std::invalid_argument("theta grid must satisfy 0 < start <= stop < 1 with step > 0");
  }
  if (!(dt_frac > 0.0) || !(dt_frac < 1.0)) {
    throw std::invalid_argument("--dt-frac must lie strictly inside (0,1)");
  }

  std::vector<double> thetas;
  for (int i = 0;; ++i) {
    const double th = start + i * step;
    if (th > stop + 1e-12) break;
    thetas.push_back(th);
  }

  // Independent certificates: fan out, then emit in theta order.
  std::vector<std::future<std::string>> futs;
  futs.reserve(thetas.size());
  for (double th : thetas) {
    futs.push_back(std::async(std::launch::async, sweep_row, th, nu, lambda1, dt_frac));
  }
  std::vector<std::string> rows;
  rows.reserve(futs.size());
  for (auto& f : futs) rows.push_back(f.get());

  std::cout << kSweepColumns << "\n";
  bool all_pass = true;
  for (const auto& r : rows) {
    std::cout << r << "\n";
    if (r.size() >= 5 && r.compare(r.size() - 5, 5, "false") == 0) all_pass = false;
  }
  if (!out.empty()) {
    const fs::path dir = resolve_out_dir(out);
    std::ofstream f(dir / "sweep.csv");
    if (!f) throw std::runtime_error("cannot write sweep CSV");
    f << kSweepColumns << "\n";
    for (const auto& r : rows) f << r << "\n";
  }
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateSetup {
  dln::stepper::SimulationConfig sim;
  dln::io::Manifest config_echo;  ///< resolved config (no output paths)
  std::string experiment;        ///< "single" or "two-ic"
  double ic_l2_b = 0.0;          ///< second initial norm for two-ic
  std::string out;
  int64_t seed = 0;
};

dln::spectral2d::VelocityField build_ic(const dln::spectral2d::TorusGrid& grid,
                                        const std::string& ic, double amplitude, double ic_l2,
                                        uint64_t seed) {
  if (ic == "taylor-green") {
    return dln::spectral2d::taylor_green(grid, amplitude);
  }
  if (ic == "random") {
    return dln::spectral2d::random_divfree(grid, seed, ic_l2);
  }
  throw std::invalid_argument("unknown ic preset '" + ic + "' (expected taylor-green or random)");
}

SimulateSetup build_simulate_setup(const ConfigMap& cfg) {
  SimulateSetup s;
  const int64_t grid_n = cfg_int(cfg, "grid_n", 64);
  const double grid_length = cfg_num(cfg, "grid_length", 2.0 * M_PI);
  dln::spectral2d::TorusGrid grid{static_cast<int>(grid_n), grid_length};
  dln::spectral2d::validate_grid(grid);

  s.sim.grid = grid;
  s.sim.theta = cfg_num(cfg, "theta", 0.5);
  s.sim.nu = cfg_num(cfg, "nu", 0.1);
  s.sim.dt = cfg_num(cfg, "dt", 0.01);
  s.sim.steps = cfg_int(cfg, "steps", 100);
  s.sim.t0 = cfg_num(cfg, "t0", 0.0);
  if (s.sim.steps < 0) throw std::invalid_argument("steps must be >= 0");

  const std::string forcing = cfg_str(cfg, "forcing", "none");
  const double f_inf = cfg_num(cfg, "forcing_finf", 0.0);
  const double omega = cfg_num(cfg, "forcing_omega", 0.0);
  const int64_t fkx = cfg_int(cfg, "forcing_kx", 1);
  const int64_t fky = cfg_int(cfg, "forcing_ky", 1);
  const double fphase = cfg_num(cfg, "forcing_phase", 0.0);
  s.sim.forcing = dln::spectral2d::make_forcing(grid, forcing, f_inf, omega,
                                                static_cast<int>(fkx), static_cast<int>(fky),
                                                fphase);

  const std::string ic = cfg_str(cfg, "ic", "taylor-green");
  const double ic_amplitude = cfg_num(cfg, "ic_amplitude", 1.0);
  const double ic_l2 = cfg_num(cfg, "ic_l2", 1.0);
  s.seed = cfg_int(cfg, "seed", 1);
  s.sim.u0 = build_ic(grid, ic, ic_amplitude, ic_l2, static_cast<uint64_t>(s.seed));

  const std::string bootstrap = cfg_str(cfg, "bootstrap", "midpoint");
  if (bootstrap == "midpoint") {
    s.sim.bootstrap = dln::stepper::Bootstrap::midpoint;
  } else if (bootstrap == "tg-exact") {
    if (ic != "taylor-green") {
      throw std::invalid_argument("bootstrap=tg-exact requires ic=taylor-green");
    }
    s.sim.bootstrap = dln::stepper::Bootstrap::given;
    s.sim.u1 = dln::spectral2d::taylor_green(
        grid, ic_amplitude * dln::spectral2d::taylor_green_decay(grid, s.sim.nu, s.sim.dt));
  } else {
    throw std::invalid_argument("unknown bootstrap '" + bootstrap +
                                "' (expected midpoint or tg-exact)");
  }

  const std::string solver = cfg_str(cfg, "solver", "fixed_point");
  if (solver == "fixed_point") {
    s.sim.solver.mode = dln::stepper::SolverPolicy::Mode::fixed_point;
  } else if (solver == "newton") {
    s.sim.solver.mode = dln::stepper::SolverPolicy::Mode::newton_like;
  } else {
    throw std::invalid_argument("unknown solver '" + solver +
                                "' (expected fixed_point or newton)");
  }
  s.sim.solver.tol = cfg_num(cfg, "solver_tol", 1e-11);
  s.sim.solver.max_iter = static_cast<int>(cfg_int(cfg, "solver_max_iter", 100));
  s.sim.allow_inadmissible = cfg_bool(cfg, "allow_inadmissible", false);
  s.sim.check_attractor = cfg_bool(cfg, "check_attractor", false);
  s.sim.blowup_factor = cfg_num(cfg, "blowup_factor", 1e6);
  s.sim.r_window = cfg_num(cfg, "r_window", -1.0);
  s.sim.c_omega = cfg_num(cfg, "c_omega", 1.0);
  s.sim.snapshot_every = cfg_int(cfg, "snapshot_every", 0);

  s.experiment = cfg_str(cfg, "experiment", "single");
  if (s.experiment != "single" && s.experiment != "two-ic") {
    throw std::invalid_argument("unknown experiment '" + s.experiment +
                                "' (expected single or two-ic)");
  }
  s.ic_l2_b = cfg_num(cfg, "ic_l2_b", ic_l2 / 100.0);
  if (s.experiment == "two-ic" && ic != "random") {
    throw std::invalid_argument("experiment=two-ic requires ic=random");
  }
  s.out = cfg_str(cfg, "out", "");

  // Resolved-config echo in fixed key order (paths excluded so outputs from
  // different directories stay byte-comparable).
  auto& m = s.config_echo;
  dln::io::manifest_add(m, "command", std::string("simulate"));
  dln::io::manifest_add(m, "code_version", std::string(kVersion));
  dln::io::manifest_add(m, "theta", s.sim.theta);
  dln::io::manifest_add(m, "nu", s.sim.nu);
  dln::io::manifest_add(m, "dt", s.sim.dt);
  dln::io::manifest_add(m, "grid_n", grid_n);
  dln::io::manifest_add(m, "grid_length", grid_length);
  dln::io::manifest_add(m, "steps", s.sim.steps);
  dln::io::manifest_add(m, "t0", s.sim.t0);
  dln::io::manifest_add(m, "ic", ic);
  dln::io::manifest_add(m, "ic_amplitude", ic_amplitude);
  dln::io::manifest_add(m, "ic_l2", ic_l2);
  dln::io::manifest_add(m, "seed", s.seed);
  dln::io::manifest_add(m, "forcing", forcing);
  dln::io::manifest_add(m, "forcing_finf", f_inf);
  dln::io::manifest_add(m, "forcing_omega", omega);
  dln::io::manifest_add(m, "forcing_kx", fkx);
  dln::io::manifest_add(m, "forcing_ky", fky);
  dln::io::manifest_add(m, "forcing_phase", fphase);
  dln::io::manifest_add(m, "solver", solver);
  dln::io::manifest_add(m, "solver_tol", s.sim.solver.tol);
  dln::io::manifest_add(m, "solver_max_iter", static_cast<int64_t>(s.sim.solver.max_iter));
  dln::io::manifest_add(m, "bootstrap", bootstrap);
  dln::io::manifest_add(m, "allow_inadmissible", s.sim.allow_inadmissible);
  dln::io::manifest_add(m, "check_attractor", s.sim.check_attractor);
  dln::io::manifest_add(m, "blowup_factor", s.sim.blowup_factor);
  dln::io::manifest_add(m, "r_window", s.sim.r_window);
  dln::io::manifest_add(m, "c_omega", s.sim.c_omega);
  dln::io::manifest_add(m, "snapshot_every", s.sim.snapshot_every);
  dln::io::manifest_add(m, "experiment", s.experiment);
  if (s.experiment == "two-ic") dln::io::manifest_add(m, "ic_l2_b", s.ic_l2_b);
  return s;
}

/// Appends result-derived keys (constants, margins) to a manifest, with an
/// optional key prefix for multi-run manifests.
void append_result_to_manifest(dln::io::Manifest& m, const dln::stepper::SimulationResult& res,
                               const std::string& prefix = "") {
  auto add = [&m, &prefix](const std::string& k, auto v) {
    dln::io::manifest_add(m, prefix + k, v);
  };
  add("lambda1", res.lambda1);
  if (res.cert) {
    const auto& c = *res.cert;
    add("C_dt", dln::certificate::max_timestep(c.input.theta, c.input.nu, c.input.lambda1));
    add("cert_E", c.E);
    add("cert_F", c.F);
    add("cert_x", c.x);
    add("cert_disc_outer", c.disc_outer);
    add("cert_disc_inner", c.disc_inner);
    add("cert_a", c.a);
    add("cert_b", c.b);
    add("cert_c", c.c);
    add("cert_h11", c.h11);
    add("cert_h22", c.h22);
    add("cert_epsilon", c.epsilon);
    add("cert_B", c.B);
    add("cert_C", c.C);
  }
  if (res.l2) {
    add("C_h_eff", res.l2->C_h_eff);
    add("C_eps_eff", res.l2->C_eps_eff);
    add("hatC_h", res.l2->hatC_h);
    add("K1", res.l2->K1);
    add("K2", res.l2->K2);
    add("rho0", res.l2->rho0);
    add("T_star", res.l2->T_star);
  }
  if (res.h1) {
    add("kappa1", res.h1->kappa1);
    add("kappa2", res.h1->kappa2);
    add("kappa3", res.h1->kappa3);
    add("kappa4", res.h1->kappa4);
    add("K3", res.h1->K3);
    add("K4", res.h1->K4);
    add("K5", res.h1->K5);
    add("K6", res.h1->K6);
    add("rho1", res.h1->rho1);
    add("rho2", res.h1->rho2);
    add("rho3", res.h1->rho3);
    add("r_window_eff", res.h1->r);
    add("C_Omega", res.h1->C_Omega);
    add("uniform_timestep_limit", res.uniform_limit);
    add("dt_below_uniform_limit", res.dt_below_uniform_limit);
  }
  add("bootstrap_iters", static_cast<int64_t>(res.bootstrap_iters));
  add("bootstrap_residual", res.bootstrap_residual);
  add("g1", res.g1);
  add("a1_start", res.a1_start);
  add("steps_completed", res.steps_completed);
  add("final_time", res.final_time);
  add("final_l2_sq", res.rows.empty() ? dln::spectral2d::l2_norm_sq(res.u_final)
                                      : res.rows.back().l2_sq);
  add("worst_stab_eq1_margin", res.worst_stab_eq1);
  add("worst_gstab_nse1_margin", res.worst_gstab_nse1);
  add("worst_l2bound0_margin", res.worst_l2bound0);
  add("worst_h1_ineq2_margin", res.worst_h1_ineq2);
  add("worst_cumulative_dissipation_margin", res.worst_cumulative_dissipation);
  add("worst_l2h1_margin", res.worst_l2h1_margin);
  add("l2h1_display_variant_worst_margin", res.l2h1_display_variant_worst);
  add("budget_max_rel_drift", res.budget_max_rel_drift);
  add("worst_k2_margin", res.worst_k2_margin);
  add("rho0_check_active", res.rho0_check_active);
  add("worst_rho0_margin", res.worst_rho0_margin);
  add("worst_k3_margin", res.worst_k3_margin);
  add("rho2_check_active", res.rho2_check_active);
  add("worst_rho2_margin", res.worst_rho2_margin);
}

/// A margin is a violation when it is materially negative relative to the
/// run's energy scale.
bool has_margin_violation(const dln::stepper::SimulationResult& res) {
  const double scale = std::max({1.0, res.g1, res.a1_start});
  const double tol = -1e-9 * scale;
  const double margins[] = {res.worst_stab_eq1,
                            res.worst_gstab_nse1,
                            res.worst_l2bound0,
                            res.worst_h1_ineq2,
                            res.worst_cumulative_dissipation,
                            res.worst_l2h1_margin,
                            res.worst_k2_margin,
                            res.worst_rho0_margin,
                            res.worst_k3_margin,
                            res.worst_rho2_margin};
  for (double v : margins) {
    if (!std::isnan(v) && v < tol) return true;
  }
  return false;
}

dln::stepper::SimulationResult run_one_simulation(const dln::stepper::SimulationConfig& sim,
                                                  const dln::io::Manifest& config_echo,
                                                  const fs::path& dir,
                                                  const std::string& ledger_name) {
  dln::io::LedgerWriter ledger((dir / ledger_name).string());
  for (const auto& [k, v] : config_echo) ledger.comment(k + "=" + v);
  ledger.header();

  dln::stepper::SimulationConfig cfg = sim;  // local copy so we can attach sinks
  if (cfg.snapshot_every > 0) {
    cfg.snapshot_sink = [&dir](int64_t index, const dln::spectral2d::VelocityField& u) {
      dln::spectral2d::write_snapshot((dir / ("snapshot_" + std::to_string(index) + ".bin")).string(),
                                      u);
    };
  }
  return dln::stepper::run_simulation(cfg,
                                      [&ledger](const dln::stepper::LedgerRow& r) { ledger.row(r); });
}

int cmd_simulate(const ConfigMap& cfg) {
  SimulateSetup setup = build_simulate_setup(cfg);
  const fs::path dir = resolve_out_dir(setup.out);

  if (setup.experiment == "single") {
    const auto res = run_one_simulation(setup.sim, setup.config_echo, dir, "ledger.csv");
    dln::spectral2d::write_snapshot((dir / "snapshot_initial.bin").string(), setup.sim.u0);
    dln::spectral2d::write_snapshot((dir / "snapshot_final.bin").string(), res.u_final);
    dln::spectral2d::export_spectrum_csv((dir / "spectrum_final.csv").string(), res.u_final);

    dln::io::Manifest m = setup.config_echo;
    append_result_to_manifest(m, res);
    dln::io::write_manifest((dir / "manifest.txt").string(), m);
    std::cout << "ledger=" << (dir / "ledger.csv").string() << "\n"
              << "manifest=" << (dir / "manifest.txt").string() << "\n"
              << "steps_completed=" << res.steps_completed << "\n";
    return has_margin_violation(res) ? 1 : 0;
  }

  // two-ic experiment: identical configuration except the initial norm.
  dln::stepper::SimulationConfig sim_a = setup.sim;
  dln::stepper::SimulationConfig sim_b = setup.sim;
  const double ic_l2_a = cfg_num(cfg, "ic_l2", 1.0);
  sim_b.u0 = dln::spectral2d::random_divfree(setup.sim.grid, static_cast<uint64_t>(setup.seed),
                                             setup.ic_l2_b);

  dln::io::Manifest echo_a = setup.config_echo;
  dln::io::Manifest echo_b = setup.config_echo;
  dln::io::manifest_add(echo_a, "run", std::string("a"));
  dln::io::manifest_add(echo_b, "run", std::string("b"));

  auto fut_a = std::async(std::launch::async, run_one_simulation, std::cref(sim_a),
                          std::cref(echo_a), std::cref(dir), std::string("ledger_a.csv"));
  auto fut_b = std::async(std::launch::async, run_one_simulation, std::cref(sim_b),
                          std::cref(echo_b), std::cref(dir), std::string("ledger_b.csv"));
  const auto res_a = fut_a.get();
  const auto res_b = fut_b.get();

  dln::io::Manifest m = setup.config_echo;
  dln::io::manifest_add(m, "ic_l2_a", ic_l2_a);
  append_result_to_manifest(m, res_a, "a_");
  append_result_to_manifest(m, res_b, "b_");
  const bool both_entered = res_a.rho0_check_active && res_b.rho0_check_active;
  const bool both_inside = both_entered && res_a.worst_rho0_margin >= 0.0 &&
                           res_b.worst_rho0_margin >= 0.0;
  dln::io::manifest_add(m, "combined_rho0_checks_active", both_entered);
  dln::io::manifest_add(m, "combined_rho0_pass", both_inside);
  dln::io::write_manifest((dir / "manifest.txt").string(), m);
  std::cout << "ledger_a=" << (dir / "ledger_a.csv").string() << "\n"
            << "ledger_b=" << (dir / "ledger_b.csv").string() << "\n"
            << "manifest=" << (dir / "manifest.txt").string() << "\n"
            << "combined_rho0_pass=" << (both_inside ? "true" : "false") << "\n";
  const bool violation = has_margin_violation(res_a) || has_margin_violation(res_b) ||
                         (both_entered && !both_inside);
  return violation ? 1 : 0;
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

struct ConvergencePoint {
  double dt = 0.0;
  double error = 0.0;
};

ConvergencePoint convergence_run(double theta, double nu, dln::spectral2d::TorusGrid grid,
                                 double amplitude, double dt, double horizon, double solver_tol) {
  dln::stepper::SimulationConfig sim;
  sim.grid = grid;
  sim.theta = theta;
  sim.nu = nu;
  sim.dt = dt;
  sim.steps = static_cast<int64_t>(std::llround(horizon / dt)) - 1;
  if (sim.steps < 0) sim.steps = 0;
  sim.forcing = dln::spectral2d::make_forcing(grid, "none", 0.0, 0.0);
  sim.u0 = dln::spectral2d::taylor_green(grid, amplitude);
  sim.u1 = dln::spectral2d::taylor_green(
      grid, amplitude * dln::spectral2d::taylor_green_decay(grid, nu, dt));
  sim.bootstrap = dln::stepper::Bootstrap::given;
  sim.solver.tol = solver_tol;
  const auto res = dln::stepper::run_simulation(sim);
  const double t_final = res.final_time;
  const auto exact = dln::spectral2d::taylor_green(
      grid, amplitude * dln::spectral2d::taylor_green_decay(grid, nu, t_final));
  const double err = std::sqrt(dln::spectral2d::l2_norm_sq(res.u_final - exact));
  return {dt, err};
}

int cmd_convergence(double theta, double nu, int grid_n, double grid_length, double amplitude,
                    double dt0, int halvings, double horizon, const std::string& out) {
  if (halvings < 0) throw std::invalid_argument("--halvings must be >= 0");
  dln::spectral2d::TorusGrid grid{grid_n, grid_length};
  dln::spectral2d::validate_grid(grid);

  std::vector<std::future<ConvergencePoint>> futs;
  for (int j = 0; j <= halvings; ++j) {
    const double dt = dt0 / static_cast<double>(1 << j);
    futs.push_back(std::async(std::launch::async, convergence_run, theta, nu, grid, amplitude,
                              dt, horizon, 1e-12));
  }
  std::vector<ConvergencePoint> pts;
  pts.reserve(futs.size());
  for (auto& f : futs) pts.push_back(f.get());

  std::ostringstream csv;
  csv << "dt,error,order\n";
  double final_order = std::numeric_limits<double>::quiet_NaN();
  for (size_t j = 0; j < pts.size(); ++j) {
    csv << dln::format_g17(pts[j].dt) << ',' << dln::format_g17(pts[j].error) << ',';
    if (j > 0 && pts[j].error > 0.0 && pts[j - 1].error > 0.0) {
      final_order = std::log2(pts[j - 1].error / pts[j].error);
      csv << dln::format_g17(final_order);
    }
    csv << "\n";
  }
  std::cout << csv.str();
  if (!std::isnan(final_order)) {
    std::cout << "final_order=" << dln::format_g17(final_order) << "\n";
  }
  if (!out.empty()) {
    const fs::path dir = resolve_out_dir(out);
    std::ofstream f(dir / "convergence.csv");
    if (!f) throw std::runtime_error("cannot write convergence CSV");
    f << csv.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// coeffs + gronwall-check
// ---------------------------------------------------------------------------

int cmd_coeffs(double theta) {
  const auto c = dln::core::make_coefficients(theta);
  auto kv = [](const std::string& k, double v) {
    std::cout << k << "=" << dln::format_g17(v) << "\n";
  };
  kv("theta", theta);
  for (int i = 0; i < 3; ++i) kv("alpha_" + std::to_string(i), c.alpha[static_cast<size_t>(i)]);
  for (int i = 0; i < 3; ++i) kv("beta_" + std::to_string(i), c.beta[static_cast<size_t>(i)]);
  for (int i = 0; i < 3; ++i) kv("dissip_" + std::to_string(i), c.dissip[static_cast<size_t>(i)]);
  kv("two_beta2_minus_one", c.two_beta2_minus_one());
  kv("sum_alpha", c.alpha[0] + c.alpha[1] + c.alpha[2]);
  kv("sum_beta_minus_one", c.beta[0] + c.beta[1] + c.beta[2] - 1.0);
  // Second-order condition: sum_l alpha_l l^2 / 2 == sum_l beta_l l.
  const double order2 = (c.alpha[1] + 4.0 * c.alpha[2]) / 2.0 - (c.beta[1] + 2.0 * c.beta[2]);
  kv("order2_residual", order2);
  return 0;
}

int cmd_gronwall_check(double k, double xi0, const std::string& eta_text,
                       const std::string& zeta_text, bool uniform, int n1, int n2, int n_star,
                       double a1, double a2, double a3) {
  if (uniform) {
    const double bound = dln::bounds::uniform_gronwall_bound(n1, n2, n_star, a1, a2, a3, k);
    std::cout << "uniform_bound=" << dln::format_g17(bound) << "\n";
    return 0;
  }
  dln::bounds::GronwallInput in;
  in.k = k;
  in.xi0 = xi0;
  in.eta = parse_number_list(eta_text);
  in.zeta = parse_number_list(zeta_text);
  const double bound = dln::bounds::gronwall_bound(in);

  // Exact recursion for comparison.
  double xi = in.xi0;
  for (size_t i = 1; i <= in.eta.size(); ++i) {
    xi = xi * (1.0 + in.k * in.eta[i - 1]) + in.k * in.zeta[i];
  }
  const bool dominates = xi <= bound * (1.0 + 1e-12);
  std::cout << "n=" << in.eta.size() << "\n"
            << "bound=" << dln::format_g17(bound) << "\n"
            << "xi_n=" << dln::format_g17(xi) << "\n"
            << "dominates=" << (dominates ? "true" : "false") << "\n";
  return dominates ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-leg two-step time stepper for 2D incompressible Navier-Stokes: "
               "stability certificates, long-time bounds, and energy-ledger simulations"};
  app.require_subcommand(1);

  // --- coeffs ---------------------------------------------------------------
  double co_theta = 0.5;
  auto* coeffs = app.add_subcommand("coeffs", "Print the method coefficient table for a theta");
  coeffs->add_option("--theta", co_theta, "method parameter in (0,1)")->required();

  // --- certify --------------------------------------------------------------
  double ce_theta = 0.5, ce_nu = 1.0, ce_lambda1 = 1.0, ce_dt = 0.1;
  std::string ce_out;
  auto* certify = app.add_subcommand("certify", "Build and check one stability certificate");
  certify->add_option("--theta", ce_theta, "method parameter in (0,1)")->required();
  certify->add_option("--nu", ce_nu, "viscosity")->required();
  certify->add_option("--lambda1", ce_lambda1, "smallest Stokes eigenvalue")->required();
  certify->add_option("--dt", ce_dt, "time-step size")->required();
  certify->add_option("--out", ce_out, "output directory for certificate.txt");

  // --- sweep ----------------------------------------------------------------
  std::string sw_grid = "0.05:0.95:0.05";
  double sw_frac = 0.99, sw_nu = 1.0, sw_lambda1 = 1.0;
  std::string sw_out;
  auto* sweep = app.add_subcommand("sweep", "Certificate sweep over a theta grid");
  sweep->add_option("--theta-grid", sw_grid, "theta grid start:stop:step");
  sweep->add_option("--dt-frac", sw_frac, "dt as a fraction of the admissibility limit");
  sweep->add_option("--nu", sw_nu, "viscosity");
  sweep->add_option("--lambda1", sw_lambda1, "smallest Stokes eigenvalue");
  sweep->add_option("--out", sw_out, "output directory for sweep.csv");

  // --- simulate ---------------------------------------------------------------
  std::string si_config;
  std::vector<std::string> si_sets;
  std::string si_out;
  auto* simulate = app.add_subcommand("simulate",
                                      "Run a simulation with a per-step energy ledger");
  simulate->add_option("--config", si_config, "flat key=value configuration file");
  simulate->add_option("--set", si_sets, "override config entries (key=value, repeatable)");
  simulate->add_option("--out", si_out, "output directory (overrides config key 'out')");

  // --- convergence ------------------------------------------------------------
  double cv_theta = 0.5, cv_nu = 0.1, cv_length = 2.0 * M_PI, cv_amplitude = 1.0, cv_dt0 = 0.02,
         cv_horizon = 1.0;
  int cv_grid_n = 32, cv_halvings = 4;
  std::string cv_out;
  auto* convergence = app.add_subcommand(
      "convergence", "Temporal order study against the exact decaying-vortex solution");
  convergence->add_option("--theta", cv_theta, "method parameter in (0,1)");
  convergence->add_option("--nu", cv_nu, "viscosity");
  convergence->add_option("--grid-n", cv_grid_n, "grid points per direction");
  convergence->add_option("--grid-length", cv_length, "torus period");
  convergence->add_option("--amplitude", cv_amplitude, "vortex amplitude");
  convergence->add_option("--dt0", cv_dt0, "coarsest time step");
  convergence->add_option("--halvings", cv_halvings, "number of dt halvings");
  convergence->add_option("--horizon", cv_horizon, "model-time horizon");
  convergence->add_option("--out", cv_out, "output directory for convergence.csv");

  // --- gronwall-check -----------------------------------------------------------
  double gw_k = 1.0, gw_xi0 = 0.0, gw_a1 = 0.0, gw_a2 = 0.0, gw_a3 = 0.0;
  std::string gw_eta, gw_zeta;
  bool gw_uniform = false;
  int gw_n1 = 0, gw_n2 = 1, gw_nstar = 2;
  auto* gronwall = app.add_subcommand("gronwall-check",
                                      "Evaluate the discrete Gronwall bounds");
  gronwall->add_option("--k", gw_k, "step size k");
  gronwall->add_option("--xi0", gw_xi0, "initial value xi_0");
  gronwall->add_option("--eta", gw_eta, "comma-separated eta_0..eta_{n-1}");
  gronwall->add_option("--zeta", gw_zeta, "comma-separated zeta_0..zeta_n (zeta_0 unused)");
  gronwall->add_flag("--uniform", gw_uniform, "evaluate the sliding-window variant instead");
  gronwall->add_option("--n1", gw_n1, "window start index");
  gronwall->add_option("--n2", gw_n2, "window width");
  gronwall->add_option("--n-star", gw_nstar, "last valid index");
  gronwall->add_option("--a1", gw_a1, "window bound on sum k*eta");
  gronwall->add_option("--a2", gw_a2, "window bound on sum k*zeta");
  gronwall->add_option("--a3", gw_a3, "window bound on sum k*xi");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (coeffs->parsed()) return cmd_coeffs(co_theta);
    if (certify->parsed()) return cmd_certify(ce_theta, ce_nu, ce_lambda1, ce_dt, ce_out);
    if (sweep->parsed()) return cmd_sweep(sw_grid, sw_frac, sw_nu, sw_lambda1, sw_out);
    if (simulate->parsed()) {
      ConfigMap cfg;
      if (!si_config.empty()) cfg = read_config_file(si_config);
      apply_overrides(cfg, si_sets);
      if (!si_out.empty()) cfg["out"] = si_out;
      return cmd_simulate(cfg);
    }
    if (convergence->parsed()) {
      return cmd_convergence(cv_theta, cv_nu, cv_grid_n, cv_length, cv_amplitude, cv_dt0,
                             cv_halvings, cv_horizon, cv_out);
    }
    if (gronwall->parsed()) {
      return cmd_gronwall_check(gw_k, gw_xi0, gw_eta, gw_zeta, gw_uniform, gw_n1, gw_n2,
                                gw_nstar, gw_a1, gw_a2, gw_a3);
    }
  } catch (const dln::NonConvergence& e) {
    std::cerr << "error (solver): " << e.what() << "\n";
    return 3;
  } catch (const dln::BlowUp& e) {
    std::cerr << "error (solver): " << e.what() << "\n";
    return 3;
  } catch (const dln::InadmissibleTimestep& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const dln::WindowTooShort& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const dln::DegenerateForcing& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const dln::NegativeDiscriminant& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
