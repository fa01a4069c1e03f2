#pragma once
/// @file vecspace.hpp
/// Abstract inner-product-space plumbing.
///
/// The stability identities in this library are algebraic statements about
/// elements of an arbitrary real inner-product space.  They are implemented
/// against the small concept below so the same code runs on plain real
/// vectors (tests, toy problems) and on divergence-free spectral velocity
/// fields (the solver) without modification.

#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace dln::core {

/// An element of a real inner-product space: closed under addition,
/// subtraction, and scaling, with a symmetric positive-definite `inner`
/// found by ADL.
template <class V>
concept InnerProductElement = requires(const V& x, const V& y, double s) {
  { inner(x, y) } -> std::convertible_to<double>;
  { x + y } -> std::convertible_to<V>;
  { x - y } -> std::convertible_to<V>;
  { s * x } -> std::convertible_to<V>;
};

/// Dense real vector with the operations required by InnerProductElement.
/// Reductions run in fixed (index) order so results are deterministic.
struct RVec {
  std::vector<double> data;

  RVec() = default;
  explicit RVec(std::size_t dim, double fill = 0.0) : data(dim, fill) {}
  explicit RVec(std::vector<double> values) : data(std::move(values)) {}
  RVec(std::initializer_list<double> values) : data(values) {}

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  const double& operator[](std::size_t i) const { return data[i]; }
};

inline void check_same_dim(const RVec& x, const RVec& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("RVec dimension mismatch: " +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  }
}

inline RVec operator+(const RVec& x, const RVec& y) {
  check_same_dim(x, y);
  RVec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
  return r;
}

inline RVec operator-(const RVec& x, const RVec& y) {
  check_same_dim(x, y);
  RVec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

inline RVec operator*(double s, const RVec& x) {
  RVec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = s * x[i];
  return r;
}

/// Euclidean inner product, accumulated in index order.
inline double inner(const RVec& x, const RVec& y) {
  check_same_dim(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// Three consecutive states of a two-step recurrence, oldest first.
template <InnerProductElement V>
struct StateTriple {
  V y_prev;  ///< y_{n-1}
  V y_curr;  ///< y_n
  V y_next;  ///< y_{n+1}
};

}  // namespace dln::core
