#include "copulagraph/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/special_functions/erf.hpp>

namespace copulagraph {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
// Nearer bound beyond this many standard deviations switches to exponential rejection.
constexpr double kTailStart = 6.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double clamp_inside(double x, double lo, double hi) {
  if (x <= lo) x = std::nextafter(lo, hi);
  if (x >= hi) x = std::nextafter(hi, lo);
  return x;
}

// Standard normal restricted to (a, b), a < b, both in standardized units.
double std_truncated_normal(double a, double b, Rng& rng) {
  if (b < 0.0) {
    // Entirely left of the mode: mirror.
    return -std_truncated_normal(-b, -a, rng);
  }
  // From here either a <= 0 <= b or 0 < a.
  const bool straddles = a <= 0.0;
  if (std::isfinite(a) && std::isfinite(b)) {
    // Narrow interval: the density varies little, uniform proposal is efficient.
    const double mode = straddles ? 0.0 : a;
    const double far = straddles ? std::max(-a, b) : b;
    const double min_ratio = std::exp(-0.5 * (far * far - mode * mode));
    if (min_ratio >= 0.25) {
      for (;;) {
        const double x = a + (b - a) * rng.uniform();
        if (rng.uniform() <= std::exp(-0.5 * (x * x - mode * mode))) return clamp_inside(x, a, b);
      }
    }
  }
  if (straddles) {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    const double u = pa + (pb - pa) * rng.uniform();
    return clamp_inside(normal_quantile(u), a, b);
  }
  if (a >= kTailStart) {
    // One-sided exponential proposal with optimal rate; rejects past b.
    const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      const double x = a - std::log(rng.uniform()) / alpha;
      if (x >= b) continue;
      const double d = x - alpha;
      if (rng.uniform() <= std::exp(-0.5 * d * d)) return clamp_inside(x, a, b);
    }
  }
  // 0 < a < kTailStart: inverse CDF on the upper tail to keep precision.
  const double sa = normal_sf(a);
  const double sb = normal_sf(b);
  const double s = sa - (sa - sb) * rng.uniform();
  return clamp_inside(-normal_quantile(s), a, b);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

Rng Rng::split(std::uint64_t id) const { return Rng(derive_seed(seed_, stream_), id); }

double Rng::uniform() {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(engine_);
    if (u > 0.0) return u;
  }
}

double Rng::normal() { return normal_(engine_); }

double Rng::chi_square(double dof) {
  std::gamma_distribution<double> g(0.5 * dof, 2.0);
  return g(engine_);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
  return d(engine_);
}

bool Rng::bernoulli(double prob) { return uniform() < prob; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t id) {
  return splitmix64(splitmix64(base) + 0xD1B54A32D192ED03ULL * (id + 1));
}

Matrix cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("cholesky: matrix not square");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  }
  Matrix l = llt.matrixL();
  if (!l.allFinite() || (l.diagonal().array() <= 0.0).any())
    throw NotPositiveDefinite("cholesky: degenerate factor");
  return l;
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("spd_inverse: matrix is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

Matrix schur_complement(const Matrix& m, const std::vector<std::size_t>& block) {
  const auto p = static_cast<std::size_t>(m.rows());
  if (block.empty() || block.size() >= p)
    throw std::invalid_argument("schur_complement: block must be a nonempty proper subset");
  std::vector<char> in_block(p, 0);
  for (std::size_t a : block) {
    if (a >= p || in_block[a]) throw std::invalid_argument("schur_complement: bad block index");
    in_block[a] = 1;
  }
  std::vector<Eigen::Index> rest;
  for (std::size_t k = 0; k < p; ++k)
    if (!in_block[k]) rest.push_back(static_cast<Eigen::Index>(k));
  std::vector<Eigen::Index> blk(block.begin(), block.end());

  const Matrix m_ab = m(blk, rest);
  const Matrix m_bb = m(rest, rest);
  Eigen::LLT<Matrix> llt(m_bb);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("schur_complement: complement block is singular");
  Matrix out = m_ab * llt.solve(m_ab.transpose());
  return 0.5 * (out + out.transpose());
}

double sample_truncated_normal(double mu, double sd, const TruncationInterval& interval, Rng& rng) {
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw std::invalid_argument("sample_truncated_normal: sd must be positive");
  if (!std::isfinite(mu)) throw std::invalid_argument("sample_truncated_normal: non-finite mean");
  if (!interval.valid() || std::isnan(interval.lower) || std::isnan(interval.upper))
    throw std::invalid_argument("sample_truncated_normal: empty interval");
  const double a = (interval.lower - mu) / sd;
  const double b = (interval.upper - mu) / sd;
  if (!(a < b)) {
    // Interval narrower than double resolution after standardizing.
    const double mid = interval.lower + 0.5 * (interval.upper - interval.lower);
    if (interval.contains(mid)) return mid;
    throw std::invalid_argument("sample_truncated_normal: interval has no interior point");
  }
  const double x = mu + sd * std_truncated_normal(a, b, rng);
  return clamp_inside(x, interval.lower, interval.upper);
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
  return std::lgamma(x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    if (prob == 0.0) return -std::numeric_limits<double>::infinity();
    if (prob == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal_quantile: probability outside [0,1]");
  }
  return -kSqrt2 * boost::math::erfc_inv(2.0 * prob);
}

double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace copulagraph
