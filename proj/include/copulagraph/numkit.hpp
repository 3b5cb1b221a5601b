#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace copulagraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a matrix expected to be symmetric positive definite is not.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seedable random stream. Child streams are derived deterministically from
/// (seed, stream id), so replicate chains can be reproduced independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream; the same (parent seed, id) always gives the same child.
  Rng split(std::uint64_t id) const;

  double uniform();  // (0, 1)
  double normal();
  double chi_square(double dof);
  std::uint64_t uniform_index(std::uint64_t n);  // [0, n)
  bool bernoulli(double prob);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives a per-task 64-bit seed from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t id);

/// Lower Cholesky factor L with L*L^T = m. Throws NotPositiveDefinite.
Matrix cholesky(const Matrix& m);

/// Inverse of an SPD matrix through its Cholesky factor.
Matrix spd_inverse(const Matrix& m);

/// K_{A,B} K_{B,B}^{-1} K_{B,A} with A = block and B its complement.
Matrix schur_complement(const Matrix& m, const std::vector<std::size_t>& block);

/// Half-open-free interval (lower, upper); infinities mark unbounded sides.
struct TruncationInterval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool valid() const { return lower < upper; }
  bool contains(double x) const { return lower < x && x < upper; }
};

/// Exact draw from N(mu, sd^2) restricted to `interval`.
double sample_truncated_normal(double mu, double sd, const TruncationInterval& interval, Rng& rng);

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

double normal_cdf(double x);
/// Upper tail 1 - Phi(x) without cancellation.
double normal_sf(double x);
double normal_quantile(double prob);

/// log(sum(exp(v))), -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& v);

}  // namespace copulagraph
