#pragma once
/// @file spectral2d.hpp
/// Pseudo-spectral discretisation of divergence-free velocity fields on
/// the 2D periodic torus [0,L)^2.
///
/// Fields are stored as full n x n complex Fourier coefficient arrays per
/// velocity component (row-major, FFTW frequency layout).  All nonlinear
/// products are formed on the physical grid and truncated back to the
/// band max(|k1|,|k2|) <= n/3; for power-of-two n this makes the
/// quadrature of triple products exact, so the advection term is
/// skew-symmetric to machine precision.
///
/// Conventions:
///   * to_spectral applies the 1/n^2 forward scaling, so
///     u(x) = sum_k uhat_k exp(i k.x) and the L2 norm satisfies
///     ||u||^2 = L^2 * sum_k |uhat_k|^2.
///   * Fields are kept divergence-free, zero-mean, and band-limited;
///     every factory and product routine restores those invariants.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dln/errors.hpp"
#include "dln/format.hpp"

namespace dln::spectral2d {

/// Uniform periodic grid with n points per direction on [0, length)^2.
struct TorusGrid {
  int n = 0;
  double length = 0.0;

  /// Dealiasing band: modes with max(|k1|,|k2|) <= band are retained.
  int band() const { return n / 3; }
  /// Physical wavenumber of integer mode 1.
  double k_unit() const { return 2.0 * M_PI / length; }
  /// Number of spectral/physical points per component.
  size_t size() const { return static_cast<size_t>(n) * static_cast<size_t>(n); }
};

inline void validate_grid(const TorusGrid& g) {
  if (g.n < 8 || (g.n & (g.n - 1)) != 0) {
    throw std::domain_error("grid size must be a power of two >= 8; got " + std::to_string(g.n));
  }
  if (!(g.length > 0.0) || !std::isfinite(g.length)) {
    throw std::domain_error("grid length must be positive and finite; got " +
                            format_g17(g.length));
  }
}

/// Smallest eigenvalue of the Stokes operator on the zero-mean
/// divergence-free space: (2*pi/L)^2.  Drives the Poincare inequality.
inline double stokes_lambda1(const TorusGrid& g) {
  validate_grid(g);
  return g.k_unit() * g.k_unit();
}

/// Integer frequency of array index i (FFTW layout).
inline int freq_of_index(int i, int n) { return i <= n / 2 ? i : i - n; }

/// Divergence-free velocity field in spectral representation.
struct VelocityField {
  TorusGrid grid;
  std::vector<std::complex<double>> u1, u2;  // n*n row-major coefficients
};

inline VelocityField make_field(const TorusGrid& g) {
  validate_grid(g);
  VelocityField f;
  f.grid = g;
  f.u1.assign(g.size(), {0.0, 0.0});
  f.u2.assign(g.size(), {0.0, 0.0});
  return f;
}

inline void check_same_grid(const VelocityField& a, const VelocityField& b) {
  if (a.grid.n != b.grid.n || a.grid.length != b.grid.length) {
    throw std::invalid_argument("velocity fields live on different grids");
  }
}

// ---------------------------------------------------------------------------
// FFT plan cache.
//
// Plans are created once per (n, sign) with FFTW_ESTIMATE | FFTW_UNALIGNED on
// scratch storage and then applied to caller arrays via the new-array execute
// interface, which is thread-safe.  FFTW_ESTIMATE keeps planning deterministic
// (no runtime measurement), which in turn keeps whole-run output bit-stable.
// ---------------------------------------------------------------------------
namespace detail {

class PlanCache {
 public:
  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(static_cast<size_t>(n) * n);
    fftw_complex* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(n, n, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fftw_plan_dft_2d failed");
    plans_.emplace(key, plan);
    return plan;
  }

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void execute(int n, int sign, std::complex<double>* data) {
  fftw_plan plan = PlanCache::instance().get(n, sign);
  fftw_complex* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, p, p);
}

}  // namespace detail

/// In-place physical -> spectral transform of one component (applies 1/n^2).
inline void to_spectral(int n, std::vector<std::complex<double>>& a) {
  detail::execute(n, FFTW_FORWARD, a.data());
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (auto& v : a) v *= scale;
}

/// In-place spectral -> physical transform of one component (no scaling).
inline void to_physical(int n, std::vector<std::complex<double>>& a) {
  detail::execute(n, FFTW_BACKWARD, a.data());
}

// ---------------------------------------------------------------------------
// Field algebra.  Fixed-order loops keep every reduction deterministic.
// ---------------------------------------------------------------------------

inline VelocityField operator+(const VelocityField& a, const VelocityField& b) {
  check_same_grid(a, b);
  VelocityField out = a;
  for (size_t i = 0; i < out.u1.size(); ++i) out.u1[i] += b.u1[i];
  for (size_t i = 0; i < out.u2.size(); ++i) out.u2[i] += b.u2[i];
  return out;
}

inline VelocityField operator-(const VelocityField& a, const VelocityField& b) {
  check_same_grid(a, b);
  VelocityField out = a;
  for (size_t i = 0; i < out.u1.size(); ++i) out.u1[i] -= b.u1[i];
  for (size_t i = 0; i < out.u2.size(); ++i) out.u2[i] -= b.u2[i];
  return out;
}

inline VelocityField operator*(double s, const VelocityField& a) {
  VelocityField out = a;
  for (auto& v : out.u1) v *= s;
  for (auto& v : out.u2) v *= s;
  return out;
}

/// Real L2 inner product over the torus: L^2 * Re sum_k (uhat . conj(vhat)).
inline double inner(const VelocityField& a, const VelocityField& b) {
  check_same_grid(a, b);
  double acc = 0.0;
  for (size_t i = 0; i < a.u1.size(); ++i) {
    acc += a.u1[i].real() * b.u1[i].real() + a.u1[i].imag() * b.u1[i].imag();
    acc += a.u2[i].real() * b.u2[i].real() + a.u2[i].imag() * b.u2[i].imag();
  }
  return a.grid.length * a.grid.length * acc;
}

/// Squared L2 norm.
inline double l2_norm_sq(const VelocityField& a) { return inner(a, a); }

/// Squared L2 norm of the velocity gradient (enstrophy-level quantity).
inline double grad_norm_sq(const VelocityField& a) {
  const int n = a.grid.n;
  const double ku = a.grid.k_unit();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k1 = ku * freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const double k2 = ku * freq_of_index(j, n);
      const double ksq = k1 * k1 + k2 * k2;
      const size_t idx = static_cast<size_t>(i) * n + j;
      acc += ksq * (std::norm(a.u1[idx]) + std::norm(a.u2[idx]));
    }
  }
  return a.grid.length * a.grid.length * acc;
}

/// Squared L2 norm of the divergence (diagnostic; ~1e-16 scale for
/// projected fields).
inline double divergence_norm_sq(const VelocityField& a) {
  const int n = a.grid.n;
  const double ku = a.grid.k_unit();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k1 = ku * freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const double k2 = ku * freq_of_index(j, n);
      const size_t idx = static_cast<size_t>(i) * n + j;
      acc += std::norm(k1 * a.u1[idx] + k2 * a.u2[idx]);
    }
  }
  return a.grid.length * a.grid.length * acc;
}

/// L2 and gradient norms in one pass (the pair every ledger row needs).
struct FieldNorms {
  double l2_sq = 0.0;
  double grad_sq = 0.0;
};

inline FieldNorms norms(const VelocityField& a) {
  FieldNorms out;
  out.l2_sq = l2_norm_sq(a);
  out.grad_sq = grad_norm_sq(a);
  return out;
}

// ---------------------------------------------------------------------------
// Projections and per-mode operators.
// ---------------------------------------------------------------------------

/// Orthogonal projection onto divergence-free, zero-mean fields:
///   uhat <- uhat - k (k . uhat)/|k|^2 for k != 0; the mean mode is zeroed.
inline void leray_project(VelocityField& a) {
  const int n = a.grid.n;
  for (int i = 0; i < n; ++i) {
    const double k1 = freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const double k2 = freq_of_index(j, n);
      const size_t idx = static_cast<size_t>(i) * n + j;
      const double ksq = k1 * k1 + k2 * k2;
      if (ksq == 0.0) {
        a.u1[idx] = 0.0;
        a.u2[idx] = 0.0;
        continue;
      }
      const std::complex<double> kdotu = k1 * a.u1[idx] + k2 * a.u2[idx];
      a.u1[idx] -= k1 * kdotu / ksq;
      a.u2[idx] -= k2 * kdotu / ksq;
    }
  }
}

/// Zeroes every mode outside the dealiasing band max(|k1|,|k2|) <= n/3.
inline void truncate_band(VelocityField& a) {
  const int n = a.grid.n;
  const int band = a.grid.band();
  for (int i = 0; i < n; ++i) {
    const int k1 = freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const int k2 = freq_of_index(j, n);
      if (std::abs(k1) > band || std::abs(k2) > band) {
        const size_t idx = static_cast<size_t>(i) * n + j;
        a.u1[idx] = 0.0;
        a.u2[idx] = 0.0;
      }
    }
  }
}

/// Applies the Stokes operator A = -Laplacian (per-mode |k|^2 multiply).
inline VelocityField apply_stokes(const VelocityField& a) {
  VelocityField out = a;
  const int n = a.grid.n;
  const double ku = a.grid.k_unit();
  for (int i = 0; i < n; ++i) {
    const double k1 = ku * freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const double k2 = ku * freq_of_index(j, n);
      const double ksq = k1 * k1 + k2 * k2;
      const size_t idx = static_cast<size_t>(i) * n + j;
      out.u1[idx] *= ksq;
      out.u2[idx] *= ksq;
    }
  }
  return out;
}

/// Solves (sigma + nu*A) v = rhs per mode (the linear part of a stage solve).
inline VelocityField solve_helmholtz(const VelocityField& rhs, double sigma, double nu) {
  VelocityField out = rhs;
  const int n = rhs.grid.n;
  const double ku = rhs.grid.k_unit();
  for (int i = 0; i < n; ++i) {
    const double k1 = ku * freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const double k2 = ku * freq_of_index(j, n);
      const double denom = sigma + nu * (k1 * k1 + k2 * k2);
      const size_t idx = static_cast<size_t>(i) * n + j;
      out.u1[idx] /= denom;
      out.u2[idx] /= denom;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nonlinear advection.
// ---------------------------------------------------------------------------

namespace detail {

/// Spectral derivative: multiplies component by i*k_axis.
inline std::vector<std::complex<double>> derivative(const TorusGrid& g,
                                                    const std::vector<std::complex<double>>& a,
                                                    int axis) {
  const int n = g.n;
  const double ku = g.k_unit();
  std::vector<std::complex<double>> out(a.size());
  for (int i = 0; i < n; ++i) {
    const double k1 = ku * freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const double k2 = ku * freq_of_index(j, n);
      const double k = axis == 0 ? k1 : k2;
      const size_t idx = static_cast<size_t>(i) * n + j;
      out[idx] = std::complex<double>(0.0, k) * a[idx];
    }
  }
  return out;
}

}  // namespace detail

/// Advection term (u . grad) v, computed by physical-space products and
/// truncated back to the dealiasing band.  NOT Leray-projected; callers
/// that need P[(u.grad)v] project afterwards.
inline VelocityField advect(const VelocityField& u, const VelocityField& v) {
  check_same_grid(u, v);
  const TorusGrid& g = u.grid;
  const int n = g.n;

  std::vector<std::complex<double>> u1p = u.u1, u2p = u.u2;
  std::vector<std::complex<double>> v1x = detail::derivative(g, v.u1, 0);
  std::vector<std::complex<double>> v1y = detail::derivative(g, v.u1, 1);
  std::vector<std::complex<double>> v2x = detail::derivative(g, v.u2, 0);
  std::vector<std::complex<double>> v2y = detail::derivative(g, v.u2, 1);
  to_physical(n, u1p);
  to_physical(n, u2p);
  to_physical(n, v1x);
  to_physical(n, v1y);
  to_physical(n, v2x);
  to_physical(n, v2y);

  VelocityField out = make_field(g);
  for (size_t i = 0; i < g.size(); ++i) {
    const double a1 = u1p[i].real(), a2 = u2p[i].real();
    out.u1[i] = a1 * v1x[i].real() + a2 * v1y[i].real();
    out.u2[i] = a1 * v2x[i].real() + a2 * v2y[i].real();
  }
  to_spectral(n, out.u1);
  to_spectral(n, out.u2);
  truncate_band(out);
  return out;
}

/// Trilinear advection integral b(u,v,w) = integral (u . grad v) . w dx,
/// evaluated by exact physical quadrature (fixed-order sum).  For
/// divergence-free u it is skew-symmetric: b(u,v,w) = -b(u,w,v).
inline double trilinear_b(const VelocityField& u, const VelocityField& v,
                          const VelocityField& w) {
  check_same_grid(u, v);
  check_same_grid(u, w);
  const TorusGrid& g = u.grid;
  const int n = g.n;

  std::vector<std::complex<double>> u1p = u.u1, u2p = u.u2;
  std::vector<std::complex<double>> v1x = detail::derivative(g, v.u1, 0);
  std::vector<std::complex<double>> v1y = detail::derivative(g, v.u1, 1);
  std::vector<std::complex<double>> v2x = detail::derivative(g, v.u2, 0);
  std::vector<std::complex<double>> v2y = detail::derivative(g, v.u2, 1);
  std::vector<std::complex<double>> w1p = w.u1, w2p = w.u2;
  to_physical(n, u1p);
  to_physical(n, u2p);
  to_physical(n, v1x);
  to_physical(n, v1y);
  to_physical(n, v2x);
  to_physical(n, v2y);
  to_physical(n, w1p);
  to_physical(n, w2p);

  double acc = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    const double a1 = u1p[i].real(), a2 = u2p[i].real();
    acc += (a1 * v1x[i].real() + a2 * v1y[i].real()) * w1p[i].real();
    acc += (a1 * v2x[i].real() + a2 * v2y[i].real()) * w2p[i].real();
  }
  const double h = g.length / n;
  return acc * h * h;
}

/// Fourth power of the L4 norm, integral |u|^4 dx, via exact quadrature on
/// a zero-padded 2n grid (band-limited |u|^2 squares exactly there).
inline double l4_norm_pow4(const VelocityField& a) {
  const int n = a.grid.n;
  const int n2 = 2 * n;
  std::vector<std::complex<double>> p1(static_cast<size_t>(n2) * n2, {0.0, 0.0});
  std::vector<std::complex<double>> p2(static_cast<size_t>(n2) * n2, {0.0, 0.0});
  for (int i = 0; i < n; ++i) {
    const int fi = freq_of_index(i, n);
    const int ti = fi >= 0 ? fi : fi + n2;
    for (int j = 0; j < n; ++j) {
      const int fj = freq_of_index(j, n);
      const int tj = fj >= 0 ? fj : fj + n2;
      p1[static_cast<size_t>(ti) * n2 + tj] = a.u1[static_cast<size_t>(i) * n + j];
      p2[static_cast<size_t>(ti) * n2 + tj] = a.u2[static_cast<size_t>(i) * n + j];
    }
  }
  to_physical(n2, p1);
  to_physical(n2, p2);
  double acc = 0.0;
  for (size_t i = 0; i < p1.size(); ++i) {
    const double sq = p1[i].real() * p1[i].real() + p2[i].real() * p2[i].real();
    acc += sq * sq;
  }
  const double h = a.grid.length / n2;
  return acc * h * h;
}

// ---------------------------------------------------------------------------
// Field factories.
// ---------------------------------------------------------------------------

/// Taylor-Green vortex with amplitude A at the fundamental wavenumber:
///   u = ( A sin(k0 x) cos(k0 y), -A cos(k0 x) sin(k0 y) ),  k0 = 2*pi/L.
/// An exact steady-shape solution of unforced NSE decaying as
/// exp(-2 nu k0^2 t); its self-advection is a pure gradient, so the
/// projected nonlinearity vanishes.
inline VelocityField taylor_green(const TorusGrid& g, double amplitude) {
  VelocityField f = make_field(g);
  const int n = g.n;
  const double k0 = g.k_unit();
  const double h = g.length / n;
  std::vector<std::complex<double>> p1(g.size()), p2(g.size());
  for (int i = 0; i < n; ++i) {
    const double x = i * h;
    for (int j = 0; j < n; ++j) {
      const double y = j * h;
      const size_t idx = static_cast<size_t>(i) * n + j;
      p1[idx] = amplitude * std::sin(k0 * x) * std::cos(k0 * y);
      p2[idx] = -amplitude * std::cos(k0 * x) * std::sin(k0 * y);
    }
  }
  to_spectral(n, p1);
  to_spectral(n, p2);
  f.u1 = std::move(p1);
  f.u2 = std::move(p2);
  truncate_band(f);
  leray_project(f);
  return f;
}

/// Decay factor of the Taylor-Green solution after time t.
inline double taylor_green_decay(const TorusGrid& g, double nu, double t) {
  const double k0 = g.k_unit();
  return std::exp(-2.0 * nu * k0 * k0 * t);
}

/// Rescales the field to a target L2 norm (no-op target for a zero field
/// throws, since the direction is undefined).
inline void rescale_l2(VelocityField& f, double target_l2) {
  if (!(target_l2 >= 0.0)) {
    throw std::domain_error("target L2 norm must be nonnegative; got " + format_g17(target_l2));
  }
  const double cur = std::sqrt(l2_norm_sq(f));
  if (cur == 0.0) {
    if (target_l2 == 0.0) return;
    throw std::domain_error("cannot rescale a zero field to a nonzero norm");
  }
  const double s = target_l2 / cur;
  for (auto& v : f.u1) v *= s;
  for (auto& v : f.u2) v *= s;
}

namespace detail {

/// Deterministic standard normal pairs from raw mt19937_64 output.
/// Hand-rolled Box-Muller so results are identical across standard
/// libraries (std::normal_distribution is implementation-defined).
class NormalSource {
 public:
  explicit NormalSource(uint64_t seed) : gen_(seed) {}

  std::pair<double, double> next_pair() {
    const double q1 = uniform();
    const double q2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(q1 + 1e-300));
    return {rad * std::cos(2.0 * M_PI * q2), rad * std::sin(2.0 * M_PI * q2)};
  }

 private:
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 gen_;
};

}  // namespace detail

/// Random divergence-free field: a Gaussian streamfunction with spectral
/// amplitude |k|^-3 (energy density ~ |k|^-4), supported on
/// 0 < max(|k1|,|k2|) <= n/4, conjugate-symmetric (real field), projected
/// and rescaled to the requested L2 norm.  Fully determined by the seed.
inline VelocityField random_divfree(const TorusGrid& g, uint64_t seed, double target_l2) {
  VelocityField f = make_field(g);
  const int n = g.n;
  const int cutoff = n / 4;
  const double ku = g.k_unit();
  detail::NormalSource rng(seed);

  std::vector<std::complex<double>> psi(g.size(), {0.0, 0.0});
  // Fill one representative of each {k, -k} pair in a fixed order.
  for (int m1 = 0; m1 <= cutoff; ++m1) {
    for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
      if (m1 == 0 && m2 <= 0) continue;  // (0,0) excluded; (0,-m2) is the conjugate image
      const auto [z1, z2] = rng.next_pair();
      const double kmag = ku * std::sqrt(static_cast<double>(m1 * m1 + m2 * m2));
      const double amp = std::pow(kmag, -3.0) / std::sqrt(2.0);
      const std::complex<double> val(amp * z1, amp * z2);
      const int i = m1 >= 0 ? m1 : m1 + n;
      const int j = m2 >= 0 ? m2 : m2 + n;
      const int ic = (n - i) % n;
      const int jc = (n - j) % n;
      psi[static_cast<size_t>(i) * n + j] = val;
      psi[static_cast<size_t>(ic) * n + jc] = std::conj(val);
    }
  }
  // u = (d/dy psi, -d/dx psi): divergence-free by construction.
  for (int i = 0; i < n; ++i) {
    const double k1 = ku * freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const double k2 = ku * freq_of_index(j, n);
      const size_t idx = static_cast<size_t>(i) * n + j;
      f.u1[idx] = std::complex<double>(0.0, k2) * psi[idx];
      f.u2[idx] = std::complex<double>(0.0, -k1) * psi[idx];
    }
  }
  truncate_band(f);
  leray_project(f);
  rescale_l2(f, target_l2);
  return f;
}

// ---------------------------------------------------------------------------
// Forcing.
// ---------------------------------------------------------------------------

/// Time-dependent body force f(t) = base * cos(omega * t), where the base
/// field is divergence-free with L2 norm equal to f_inf.  The sup-in-time
/// L2 norm is therefore exactly f_inf (omega = 0 gives constant forcing).
struct Forcing {
  VelocityField base;
  double omega = 0.0;
  double f_inf = 0.0;

  VelocityField at(double t) const {
    return (omega == 0.0 ? 1.0 : std::cos(omega * t)) * base;
  }
  /// L2 norm of f at time t (cheap; no field copy).
  double norm_at(double t) const {
    return f_inf * (omega == 0.0 ? 1.0 : std::abs(std::cos(omega * t)));
  }
};

/// Builds a forcing field.  Shapes:
///   "none"        zero forcing (f_inf ignored, coerced to 0)
///   "tg"          Taylor-Green shape at the fundamental wavenumber
///   "single_mode" one Fourier mode (kx, ky) with the given phase
inline Forcing make_forcing(const TorusGrid& g, const std::string& shape, double f_inf,
                            double omega, int kx = 1, int ky = 1, double phase = 0.0) {
  if (!(f_inf >= 0.0)) {
    throw std::domain_error("forcing amplitude must be nonnegative; got " + format_g17(f_inf));
  }
  Forcing out;
  out.omega = omega;
  if (shape == "none" || f_inf == 0.0) {
    out.base = make_field(g);
    out.f_inf = 0.0;
    return out;
  }
  if (shape == "tg") {
    out.base = taylor_green(g, 1.0);
  } else if (shape == "single_mode") {
    const int band = g.band();
    if (kx == 0 && ky == 0) throw std::domain_error("single_mode forcing cannot use the mean mode");
    if (std::abs(kx) > band || std::abs(ky) > band) {
      throw std::domain_error("single_mode forcing wavenumber outside the dealiasing band");
    }
    VelocityField base = make_field(g);
    const int n = g.n;
    const int i = kx >= 0 ? kx : kx + n;
    const int j = ky >= 0 ? ky : ky + n;
    const int ic = (n - i) % n;
    const int jc = (n - j) % n;
    const std::complex<double> val = std::polar(1.0, phase);
    // Put the amplitude on a direction orthogonal to k so the Leray
    // projection keeps it intact.
    base.u1[static_cast<size_t>(i) * n + j] = val * static_cast<double>(-ky);
    base.u2[static_cast<size_t>(i) * n + j] = val * static_cast<double>(kx);
    base.u1[static_cast<size_t>(ic) * n + jc] = std::conj(val) * static_cast<double>(-ky);
    base.u2[static_cast<size_t>(ic) * n + jc] = std::conj(val) * static_cast<double>(kx);
    leray_project(base);
    out.base = std::move(base);
  } else {
    throw std::domain_error("unknown forcing shape '" + shape + "'");
  }
  rescale_l2(out.base, f_inf);
  out.f_inf = f_inf;
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots and spectra.
// ---------------------------------------------------------------------------

/// Writes a field as flat binary: int64 n, double length, then the u1 and
/// u2 coefficient arrays (row-major, interleaved re/im doubles).
inline void write_snapshot(const std::string& path, const VelocityField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open snapshot file for writing: " + path);
  const int64_t n64 = f.grid.n;
  out.write(reinterpret_cast<const char*>(&n64), sizeof(n64));
  out.write(reinterpret_cast<const char*>(&f.grid.length), sizeof(double));
  out.write(reinterpret_cast<const char*>(f.u1.data()),
            static_cast<std::streamsize>(f.u1.size() * sizeof(std::complex<double>)));
  out.write(reinterpret_cast<const char*>(f.u2.data()),
            static_cast<std::streamsize>(f.u2.size() * sizeof(std::complex<double>)));
  if (!out) throw std::runtime_error("short write on snapshot file: " + path);
}

inline VelocityField read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot file for reading: " + path);
  int64_t n64 = 0;
  double length = 0.0;
  in.read(reinterpret_cast<char*>(&n64), sizeof(n64));
  in.read(reinterpret_cast<char*>(&length), sizeof(double));
  TorusGrid g{static_cast<int>(n64), length};
  VelocityField f = make_field(g);
  in.read(reinterpret_cast<char*>(f.u1.data()),
          static_cast<std::streamsize>(f.u1.size() * sizeof(std::complex<double>)));
  in.read(reinterpret_cast<char*>(f.u2.data()),
          static_cast<std::streamsize>(f.u2.size() * sizeof(std::complex<double>)));
  if (!in) throw std::runtime_error("short read on snapshot file: " + path);
  return f;
}

/// Writes the shell-summed energy spectrum as CSV: rows (shell, energy)
/// where shell s collects modes with round(|k|_int) == s and energy is
/// L^2 * sum |uhat|^2 over the shell.
inline void export_spectrum_csv(const std::string& path, const VelocityField& f) {
  const int n = f.grid.n;
  const int max_shell = n / 2;
  std::vector<double> shell(static_cast<size_t>(max_shell) + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const int k1 = freq_of_index(i, n);
    for (int j = 0; j < n; ++j) {
      const int k2 = freq_of_index(j, n);
      const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k1 * k1 + k2 * k2))));
      if (s > max_shell) continue;
      const size_t idx = static_cast<size_t>(i) * n + j;
      shell[static_cast<size_t>(s)] += std::norm(f.u1[idx]) + std::norm(f.u2[idx]);
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open spectrum file for writing: " + path);
  out << "shell,energy\n";
  const double scale = f.grid.length * f.grid.length;
  for (size_t s = 0; s < shell.size(); ++s) {
    out << s << "," << format_g17(scale * shell[s]) << "\n";
  }
}

}  // namespace dln::spectral2d
