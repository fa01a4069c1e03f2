/// The three algebraic stability identities and the two pair norms:
/// exactness on random state triples, the constant-sequence degeneracies,
/// and frozen norm examples.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dln/gstability.hpp"
#include "dln/method.hpp"
#include "dln/vecspace.hpp"

using dln::core::RVec;
using dln::core::StateTriple;

namespace {

RVec random_vec(std::mt19937& gen, size_t dim) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  RVec v(dim);
  for (size_t i = 0; i < dim; ++i) v[i] = dist(gen);
  return v;
}

/// Scale for residual tolerances: the largest squared norm in the triple.
double triple_scale(const StateTriple<RVec>& t) {
  return std::max({inner(t.y_prev, t.y_prev), inner(t.y_curr, t.y_curr),
                   inner(t.y_next, t.y_next), 1.0});
}

}  // namespace

TEST_CASE("stability identities vanish on random triples") {
  std::mt19937 gen(20240817);
  for (double theta : {0.1, 0.35, 0.5, 0.65, 0.9}) {
    for (size_t dim : {size_t{4}, size_t{64}}) {
      for (int rep = 0; rep < 50; ++rep) {
        const StateTriple<RVec> t{random_vec(gen, dim), random_vec(gen, dim),
                                  random_vec(gen, dim)};
        CAPTURE(theta, dim, rep);
        const double scale = triple_scale(t);
        CHECK(std::abs(dln::core::g_stability_residual(t, theta)) < 1e-12 * scale);
        CHECK(std::abs(dln::core::identity1_residual(t, theta)) < 1e-12 * scale);
        CHECK(std::abs(dln::core::identity2_residual(t, theta)) < 1e-12 * scale);
      }
    }
  }
}

TEST_CASE("stability identities hold for scalar-like states") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    const StateTriple<RVec> t{RVec({dist(gen)}), RVec({dist(gen)}), RVec({dist(gen)})};
    const double scale = triple_scale(t);
    CHECK(std::abs(dln::core::g_stability_residual(t, 0.4)) < 1e-13 * scale);
    CHECK(std::abs(dln::core::identity1_residual(t, 0.4)) < 1e-13 * scale);
    CHECK(std::abs(dln::core::identity2_residual(t, 0.4)) < 1e-13 * scale);
  }
}

TEST_CASE("constant sequences degenerate as the identities predict") {
  const RVec v({1.5, -2.0, 0.5});
  const StateTriple<RVec> t{v, v, v};
  const double vsq = inner(v, v);

  for (double theta : {0.2, 0.5, 0.8}) {
    CAPTURE(theta);
    // All residuals vanish (the alpha and dissipation combinations are zero).
    CHECK(std::abs(dln::core::g_stability_residual(t, theta)) < 1e-14 * vsq);
    CHECK(std::abs(dln::core::identity1_residual(t, theta)) < 1e-14 * vsq);
    CHECK(std::abs(dln::core::identity2_residual(t, theta)) < 1e-14 * vsq);

    // For the state-combination identity both sides equal ||v||^2: the
    // beta weights sum to one, and on the other side the pivotal weight
    // plus the two pair terms add up to one as well.
    const auto c = dln::core::make_coefficients(theta);
    const RVec vb = combine_beta(t, c);
    CHECK(inner(vb, t.y_next) == Catch::Approx(vsq).epsilon(1e-14));
    CHECK(c.two_beta2_minus_one() + 2.0 * c.beta[1] + 2.0 * c.beta[0] ==
          Catch::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("pair norms take their frozen example values") {
  const RVec u({1.0, 1.0});        // ||u||^2 = 2
  const RVec v({1.0, 1.0, 1.0});   // ||v||^2 = 3
  CHECK(dln::core::g_norm_sq(u, v, 0.5) == Catch::Approx(1.125).epsilon(1e-15));

  // Weights of the strengthened norm for theta=0.5, nu=lambda1=1, dt=0.2.
  const double h11 = 0.33818106411341816837;
  const double h22 = 0.13513513513513513574;
  CHECK(dln::core::h_norm_sq(u, v, h11, h22) ==
        Catch::Approx(1.081767533632241744).epsilon(1e-14));
}

TEST_CASE("pair norms are positive definite") {
  std::mt19937 gen(99);
  for (int rep = 0; rep < 20; ++rep) {
    const RVec u = random_vec(gen, 8);
    const RVec z(8, 0.0);
    for (double theta : {0.1, 0.9}) {
      CHECK(dln::core::g_norm_sq(u, z, theta) > 0.0);
      CHECK(dln::core::g_norm_sq(z, u, theta) > 0.0);
    }
  }
  CHECK(dln::core::g_norm_sq(RVec(3, 0.0), RVec(3, 0.0), 0.5) == 0.0);
}
