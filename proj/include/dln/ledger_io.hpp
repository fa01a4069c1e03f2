#pragma once
/// @file ledger_io.hpp
/// Deterministic text output: the per-step ledger CSV and run manifests.
///
/// Every floating-point value is written with 17 significant digits so
/// files round-trip doubles exactly; rows are written in step order, so a
/// repeated run with the same configuration and seed produces
/// byte-identical files.

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dln/format.hpp"
#include "dln/stepper.hpp"

namespace dln::io {

inline const char* ledger_columns() {
  return "step_index,t,l2_sq,grad_sq,g_norm_sq,h_norm_sq,dissipation_sq,A_n,"
         "stab_eq1_margin,gstab_nse1_margin,l2bound0_margin,h1_ineq2_margin,"
         "solver_iters,solver_residual";
}

/// Streams ledger rows to a CSV file.  Comment lines ('#'-prefixed) carry
/// the configuration echo; callers must not put output paths in them so
/// that ledgers from different output directories stay byte-comparable.
class LedgerWriter {
 public:
  explicit LedgerWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open ledger file for writing: " + path);
  }

  void comment(const std::string& line) { out_ << "# " << line << "\n"; }

  void header() { out_ << ledger_columns() << "\n"; }

  void row(const stepper::LedgerRow& r) {
    out_ << r.step_index << ',' << format_g17(r.t) << ',' << format_g17(r.l2_sq) << ','
         << format_g17(r.grad_sq) << ',' << format_g17(r.g_norm_sq) << ','
         << format_g17(r.h_norm_sq) << ',' << format_g17(r.dissipation_sq) << ','
         << format_g17(r.A_n) << ',' << format_g17(r.stab_eq1_margin) << ','
         << format_g17(r.gstab_nse1_margin) << ',' << format_g17(r.l2bound0_margin) << ','
         << format_g17(r.h1_ineq2_margin) << ',' << r.solver_iters << ','
         << format_g17(r.solver_residual) << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

/// Ordered key=value pairs; insertion order is preserved in the file.
using Manifest = std::vector<std::pair<std::string, std::string>>;

inline void manifest_add(Manifest& m, const std::string& key, const std::string& value) {
  m.emplace_back(key, value);
}

inline void manifest_add(Manifest& m, const std::string& key, double value) {
  m.emplace_back(key, format_g17(value));
}

inline void manifest_add(Manifest& m, const std::string& key, int64_t value) {
  m.emplace_back(key, std::to_string(value));
}

inline void manifest_add(Manifest& m, const std::string& key, bool value) {
  m.emplace_back(key, value ? "true" : "false");
}

inline void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open manifest file for writing: " + path);
  for (const auto& [k, v] : m) out << k << "=" << v << "\n";
}

}  // namespace dln::io
