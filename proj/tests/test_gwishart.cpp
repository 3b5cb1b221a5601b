#include "doctest.h"

#include <cmath>
#include <numbers>

#include "copulagraph/gwishart.hpp"

using namespace copulagraph;

namespace {

// log of the full-Wishart constant under |K|^{(b-2)/2} exp(-tr(DK)/2).
double log_wishart_constant(double b, const Matrix& D) {
  const auto p = static_cast<double>(D.rows());
  const double delta = b + p - 1.0;
  double lmg = 0.25 * p * (p - 1.0) * std::log(std::numbers::pi);
  for (int i = 0; i < static_cast<int>(p); ++i) lmg += std::lgamma(0.5 * (delta - i));
  return 0.5 * delta * p * std::log(2.0) - 0.5 * delta * std::log(D.determinant()) + lmg;
}

// Quadrature of k^{(b-2)/2} exp(-d k / 2) and its first moment, with k = u^2
// so the integrand is smooth at 0.
std::pair<double, double> quad_1d(double b, double d) {
  const int steps = 200000;
  const double hi = std::sqrt(200.0 / d), h = hi / steps;
  double z = 0.0, m = 0.0;
  for (int s = 1; s <= steps; ++s) {
    const double u = s * h, k = u * u;
    const double f = 2.0 * u * std::pow(k, 0.5 * (b - 2.0)) * std::exp(-0.5 * d * k) * (s == steps ? 0.5 : 1.0);
    z += f * h;
    m += k * f * h;
  }
  return {z, m / z};
}

Graph random_graph(std::size_t p, Rng& rng) {
  Graph g(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (rng.bernoulli(0.5)) g.set_edge(Edge(i, j), true);
  return g;
}

}  // namespace

TEST_CASE("params validation") {
  CHECK_THROWS(GWishartParams(2.0, Matrix::Identity(2, 2)).validate());
  Matrix asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS(GWishartParams(3.0, asym).validate());
  Matrix indef(2, 2);
  indef << 1, 2, 2, 1;
  CHECK_THROWS_AS(GWishartParams(3.0, indef).validate(), NotPositiveDefinite);
  CHECK_NOTHROW(GWishartParams::identity(4).validate());
}

TEST_CASE("unrestricted Wishart first moment") {
  Rng rng(1);
  const auto params = GWishartParams::identity(2, 3.0);
  Matrix acc = Matrix::Zero(2, 2);
  for (int s = 0; s < 10000; ++s) {
    const Matrix k = sample_wishart_full(params, rng);
    REQUIRE((k - k.transpose()).norm() == 0.0);
    REQUIRE_NOTHROW(cholesky(k));
    acc += k;
  }
  acc /= 10000.0;
  // E[K] = (b + p - 1) D^{-1} = 4 I.
  CHECK(acc(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(acc(1, 1) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::abs(acc(0, 1)) < 0.2);
}

TEST_CASE("p=1 draw matches quadrature of its density") {
  // D = [2]: density k^{1/2} e^{-k}; the moment identity gives 1.5.
  const auto [z, mean] = quad_1d(3.0, 2.0);
  (void)z;
  CHECK(mean == doctest::Approx(1.5).epsilon(1e-6));
  Rng rng(2);
  GWishartParams params(3.0, Matrix::Constant(1, 1, 2.0));
  double s = 0.0;
  for (int k = 0; k < 20000; ++k) s += sample_wishart_full(params, rng)(0, 0);
  CHECK(s / 20000 == doctest::Approx(mean).epsilon(0.02));
  const auto g = sample_gwishart(Graph(1), params, rng);
  CHECK(g.K(0, 0) > 0.0);
}

TEST_CASE("complete graph skips completion") {
  Rng a(5), b(5);
  const auto params = GWishartParams::identity(4, 3.0);
  const Matrix full = sample_wishart_full(params, a);
  const auto g = sample_gwishart(Graph::complete(4), params, b);
  CHECK((full - g.K).norm() == 0.0);
}

TEST_CASE("empty and path graphs") {
  Rng rng(7);
  const auto params = GWishartParams::identity(3, 3.0);
  const auto e = sample_gwishart(Graph(3), params, rng);
  CHECK(std::abs(e.K(0, 1)) < 1e-8);
  CHECK(std::abs(e.K(0, 2)) < 1e-8);
  CHECK(std::abs(e.K(1, 2)) < 1e-8);

  Graph path(3);
  path.set_edge(Edge(0, 1), true);
  path.set_edge(Edge(1, 2), true);
  CompletionReport rep;
  const auto k = sample_gwishart(path, params, rng, {}, &rep);
  CHECK(k.K(0, 2) == 0.0);
  CHECK(rep.max_nonedge_before_writeback < 1e-8);
  CHECK_NOTHROW(cholesky(k.K));
  // Partial correlation of 0 and 2 given 1 from the covariance.
  const Matrix s = spd_inverse(k.K);
  const double pc = s(0, 2) - s(0, 1) * s(1, 2) / s(1, 1);
  CHECK(std::abs(pc) < 1e-8);
}

TEST_CASE("zero pattern over random graphs, residual decreasing") {
  Rng rng(9);
  Matrix D = Matrix::Identity(5, 5);
  D(0, 1) = D(1, 0) = 0.3;
  D(2, 4) = D(4, 2) = -0.2;
  const GWishartParams params(4.0, D);
  for (int s = 0; s < 300; ++s) {
    const Graph g = random_graph(5, rng);
    CompletionReport rep;
    const auto k = sample_gwishart(g, params, rng, {}, &rep);
    REQUIRE(matches_zero_pattern(k.K, g, 0.0));
    REQUIRE(rep.max_nonedge_before_writeback <= 1e-8);
    REQUIRE_NOTHROW(cholesky(k.K));
    // The first sweep replaces raw draws; contraction holds from the second on.
    for (std::size_t t = 2; t < rep.residual_history.size(); ++t)
      REQUIRE(rep.residual_history[t] <= rep.residual_history[t - 1]);
  }
}

TEST_CASE("completion cap reports non-convergence") {
  Rng rng(4);
  Graph cycle(5);
  for (std::size_t v = 0; v < 5; ++v) cycle.set_edge(Edge(v, (v + 1) % 5), true);
  CompletionOptions opts;
  opts.max_sweeps = 1;
  try {
    sample_gwishart(cycle, GWishartParams::identity(5, 3.0), rng, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 1e-8);
  }
}

TEST_CASE("complete graph moments agree with unrestricted draws") {
  Rng a(12), b(13);
  Matrix D(3, 3);
  D << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 1.5;
  const GWishartParams params(3.5, D);
  Matrix m1 = Matrix::Zero(3, 3), m2 = Matrix::Zero(3, 3), q1 = Matrix::Zero(3, 3), q2 = Matrix::Zero(3, 3);
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const Matrix x = sample_wishart_full(params, a);
    const Matrix y = sample_gwishart(Graph::complete(3), params, b).K;
    m1 += x;
    m2 += y;
    q1 += x.cwiseProduct(x);
    q2 += y.cwiseProduct(y);
  }
  m1 /= n;
  m2 /= n;
  q1 /= n;
  q2 /= n;
  const Matrix expected = (params.b + 2.0) * spd_inverse(D);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double var = q1(i, j) - m1(i, j) * m1(i, j);
      const double se = std::sqrt(2.0 * var / n);
      CHECK(std::abs(m1(i, j) - m2(i, j)) < 4.0 * se);
      CHECK(std::abs(m1(i, j) - expected(i, j)) < 4.0 * std::sqrt(var / n));
      CHECK(q1(i, j) == doctest::Approx(q2(i, j)).epsilon(0.1));
    }
}

TEST_CASE("normalizing ratio identity") {
  CHECK(log_norm_ratio_identity(3.0, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(log_norm_ratio_identity(3.0, 1) == doctest::Approx(std::log(1.5 * std::numbers::pi)).epsilon(1e-12));
  for (std::size_t d = 0; d < 10; ++d) CHECK(log_norm_ratio_identity(3.0, d + 1) > log_norm_ratio_identity(3.0, d));
  CHECK_THROWS(log_norm_ratio_identity(2.0, 0));
}

TEST_CASE("MC normalizing constant: closed-form cases") {
  Rng rng(21);
  // Empty graph factorizes into 1-d integrals.
  const auto empty = mc_log_norm_constant(Graph(2), GWishartParams::identity(2, 3.0), 1000, rng);
  const double one_d = std::log(quad_1d(3.0, 1.0).first);
  CHECK(std::abs(empty.log_estimate - 2.0 * one_d) < 3.0 * empty.std_error + 1e-9);

  const auto full = mc_log_norm_constant(Graph::complete(3), GWishartParams::identity(3, 3.0), 1000, rng);
  CHECK(full.std_error == 0.0);
  CHECK(full.log_estimate == doctest::Approx(log_wishart_constant(3.0, Matrix::Identity(3, 3))).epsilon(1e-12));

  Matrix D(3, 3);
  D << 2, 0.4, 0.1, 0.4, 1.5, -0.3, 0.1, -0.3, 1;
  const auto fd = mc_log_norm_constant(Graph::complete(3), GWishartParams(4.5, D), 1000, rng);
  CHECK(fd.log_estimate == doctest::Approx(log_wishart_constant(4.5, D)).epsilon(1e-12));

  CHECK_THROWS(mc_log_norm_constant(Graph(2), GWishartParams::identity(2, 3.0), 999, rng));
}

TEST_CASE("MC normalizing constant: decomposable star") {
  // Cliques {0,1}, {0,2}, separator {0}: I_G = I_2^2 / I_1.
  Rng rng(22);
  Graph star(3);
  star.set_edge(Edge(0, 1), true);
  star.set_edge(Edge(0, 2), true);
  const auto est = mc_log_norm_constant(star, GWishartParams::identity(3, 3.0), 100000, rng);
  const double exact = 2.0 * log_wishart_constant(3.0, Matrix::Identity(2, 2)) -
                       log_wishart_constant(3.0, Matrix::Identity(1, 1));
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.log_estimate - exact) < 3.0 * est.std_error);
}

TEST_CASE("MC ratio agrees with the identity at p=4") {
  Rng rng(23);
  Graph g = Graph::complete(4);
  g.set_edge(Edge(2, 3), false);
  const Edge e(0, 1);  // d = 2 common neighbours
  const auto params = GWishartParams::identity(4, 3.0);
  const auto with = mc_log_norm_constant(g, params, 100000, rng);
  const auto without = mc_log_norm_constant(toggle_edge(g, e), params, 100000, rng);
  const double ratio = std::exp(with.log_estimate - without.log_estimate);
  const double exact = std::exp(log_norm_ratio_identity(3.0, g.triangle_count(e)));
  CHECK(ratio == doctest::Approx(exact).epsilon(0.05));
}
