#include "copulagraph/copula.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace copulagraph {

std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::kContinuous: return "continuous";
    case VariableKind::kOrdinal: return "ordinal";
    case VariableKind::kCount: return "count";
    case VariableKind::kBinary: return "binary";
  }
  return "unknown";
}

VariableKind parse_variable_kind(std::string_view name) {
  if (name == "continuous") return VariableKind::kContinuous;
  if (name == "ordinal") return VariableKind::kOrdinal;
  if (name == "count") return VariableKind::kCount;
  if (name == "binary") return VariableKind::kBinary;
  throw std::invalid_argument("unknown variable kind '" + std::string(name) + "'");
}

MixedDataset::MixedDataset(Matrix values_, std::vector<VariableKind> kinds_)
    : values(std::move(values_)),
      kinds(std::move(kinds_)),
      missing(MissingMask::Constant(values.rows(), values.cols(), false)) {}

MixedDataset::MixedDataset(Matrix values_, std::vector<VariableKind> kinds_, MissingMask missing_)
    : values(std::move(values_)), kinds(std::move(kinds_)), missing(std::move(missing_)) {}

std::string MixedDataset::column_name(std::size_t col) const {
  if (col < names.size()) return names[col];
  return "V" + std::to_string(col + 1);
}

void MixedDataset::validate() const {
  if (n() < 2 || p() < 2) throw std::invalid_argument("dataset needs n >= 2 and p >= 2");
  if (kinds.size() != p()) throw std::invalid_argument("one variable kind per column required");
  if (missing.rows() != values.rows() || missing.cols() != values.cols())
    throw std::invalid_argument("missing mask shape differs from data");
  if (!names.empty() && names.size() != p())
    throw std::invalid_argument("column names must match column count");
  for (std::size_t c = 0; c < p(); ++c) {
    std::set<double> levels;
    for (std::size_t r = 0; r < n(); ++r) {
      if (is_missing(r, c)) continue;
      const double v = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (!std::isfinite(v))
        throw std::invalid_argument("non-finite value at row " + std::to_string(r) + ", column " +
                                    column_name(c));
      if (is_discrete(kinds[c]) && v != std::round(v))
        throw std::invalid_argument("non-integer level at row " + std::to_string(r) +
                                    ", column " + column_name(c));
      levels.insert(v);
    }
    if (kinds[c] == VariableKind::kBinary && levels.size() > 2)
      throw std::invalid_argument("binary column " + column_name(c) + " has more than 2 levels");
  }
}

TruncationInterval truncation_bounds(const Vector& z_col, const Vector& y_col, std::size_t row,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& missing_col) {
  const auto r = static_cast<Eigen::Index>(row);
  TruncationInterval out;
  for (Eigen::Index s = 0; s < y_col.size(); ++s) {
    if (missing_col(s)) continue;
    if (y_col(s) < y_col(r)) out.lower = std::max(out.lower, z_col(s));
    if (y_col(s) > y_col(r)) out.upper = std::min(out.upper, z_col(s));
  }
  return out;
}

namespace {

// Non-missing rows of column c sorted by observed value, grouped by ties.
std::vector<std::vector<std::size_t>> level_groups(const MixedDataset& data, std::size_t c) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < data.n(); ++r)
    if (!data.is_missing(r, c)) rows.push_back(r);
  const auto col = static_cast<Eigen::Index>(c);
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return data.values(static_cast<Eigen::Index>(a), col) <
           data.values(static_cast<Eigen::Index>(b), col);
  });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k == 0 || data.values(static_cast<Eigen::Index>(rows[k]), col) !=
                      data.values(static_cast<Eigen::Index>(rows[k - 1]), col))
      groups.emplace_back();
    groups.back().push_back(rows[k]);
  }
  return groups;
}

}  // namespace

LatentMatrix initialize_latent(const MixedDataset& data, Rng& rng, LatentMode mode) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  LatentMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < p; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    for (std::size_t r = 0; r < n; ++r)
      if (data.is_missing(r, c)) z(static_cast<Eigen::Index>(r), col) = rng.normal();
    if (mode == LatentMode::kGaussian) {
      for (std::size_t r = 0; r < n; ++r)
        if (!data.is_missing(r, c))
          z(static_cast<Eigen::Index>(r), col) = data.values(static_cast<Eigen::Index>(r), col);
      continue;
    }
    const auto groups = level_groups(data, c);
    std::size_t n_obs = 0;
    for (const auto& g : groups) n_obs += g.size();
    std::vector<double> score(groups.size());
    std::size_t before = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double mid_rank = static_cast<double>(before) + 0.5 * (static_cast<double>(groups[g].size()) + 1.0);
      score[g] = normal_quantile(mid_rank / (static_cast<double>(n_obs) + 1.0));
      before += groups[g].size();
    }
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t g = 1; g < groups.size(); ++g) min_gap = std::min(min_gap, score[g] - score[g - 1]);
    // Strictly below half the smallest gap so distinct levels never swap.
    const double jitter = std::isfinite(min_gap) ? 0.25 * min_gap : 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t r : groups[g]) {
        double v = score[g];
        if (groups[g].size() > 1 && jitter > 0.0) v += jitter * (2.0 * rng.uniform() - 1.0);
        z(static_cast<Eigen::Index>(r), col) = v;
      }
    }
  }
  return z;
}

bool is_rank_consistent(const LatentMatrix& z, const MixedDataset& data) {
  for (std::size_t c = 0; c < data.p(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    const auto groups = level_groups(data, c);
    double prev_max = -std::numeric_limits<double>::infinity();
    for (const auto& g : groups) {
      double gmin = std::numeric_limits<double>::infinity();
      double gmax = -std::numeric_limits<double>::infinity();
      for (std::size_t r : g) {
        const double v = z(static_cast<Eigen::Index>(r), col);
        if (!std::isfinite(v)) return false;
        gmin = std::min(gmin, v);
        gmax = std::max(gmax, v);
      }
      if (!(prev_max < gmin)) return false;
      prev_max = gmax;
    }
  }
  return true;
}

LatentSampler::LatentSampler(const MixedDataset& data, LatentMode mode) : data_(&data), mode_(mode) {
  columns_.resize(data.p());
  for (std::size_t c = 0; c < data.p(); ++c) {
    Column& col = columns_[c];
    col.group.assign(data.n(), -1);
    col.rows = level_groups(data, c);
    for (std::size_t g = 0; g < col.rows.size(); ++g)
      for (std::size_t r : col.rows[g]) col.group[r] = static_cast<int>(g);
  }
}

void LatentSampler::sweep(LatentMatrix& z, const Matrix& K, Rng& rng) const {
  const MixedDataset& data = *data_;
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  if (z.rows() != n || z.cols() != p || K.rows() != p)
    throw std::invalid_argument("latent sweep: dimension mismatch");

  std::vector<double> gmin, gmax;
  for (Eigen::Index c = 0; c < p; ++c) {
    const double kcc = K(c, c);
    if (!(kcc > 0.0) || !std::isfinite(kcc))
      throw std::runtime_error("latent sweep: non-positive precision diagonal");
    const double sd = 1.0 / std::sqrt(kcc);
    // Conditional means use only the other columns, so the whole column is
    // computed before its cells change.
    const Vector mean = -(z * K.col(c) - z.col(c) * kcc) / kcc;
    if (!mean.allFinite()) throw std::runtime_error("latent sweep: non-finite conditional mean");

    const Column& col = columns_[static_cast<std::size_t>(c)];
    const bool constrained = mode_ == LatentMode::kCopula;
    const std::size_t ng = col.rows.size();
    if (constrained) {
      gmin.assign(ng, 0.0);
      gmax.assign(ng, 0.0);
      for (std::size_t g = 0; g < ng; ++g) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t r : col.rows[g]) {
          lo = std::min(lo, z(static_cast<Eigen::Index>(r), c));
          hi = std::max(hi, z(static_cast<Eigen::Index>(r), c));
        }
        gmin[g] = lo;
        gmax[g] = hi;
      }
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      const int g = col.group[static_cast<std::size_t>(r)];
      if (g < 0) {
        z(r, c) = mean(r) + sd * rng.normal();
        continue;
      }
      if (!constrained) continue;
      const auto gi = static_cast<std::size_t>(g);
      TruncationInterval bounds;
      if (gi > 0) bounds.lower = gmax[gi - 1];
      if (gi + 1 < ng) bounds.upper = gmin[gi + 1];
      const double old = z(r, c);
      const double v = sample_truncated_normal(mean(r), sd, bounds, rng);
      z(r, c) = v;
      if (v > gmax[gi]) gmax[gi] = v;
      if (v < gmin[gi]) gmin[gi] = v;
      if ((old == gmax[gi] && v < old) || (old == gmin[gi] && v > old)) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t rr : col.rows[gi]) {
          lo = std::min(lo, z(static_cast<Eigen::Index>(rr), c));
          hi = std::max(hi, z(static_cast<Eigen::Index>(rr), c));
        }
        gmin[gi] = lo;
        gmax[gi] = hi;
      }
    }
  }
  assert(mode_ != LatentMode::kCopula || is_rank_consistent(z, data));
}

LatentMatrix gibbs_update_latent(LatentMatrix z, const Matrix& K, const MixedDataset& data, Rng& rng,
                                 LatentMode mode) {
  LatentSampler sampler(data, mode);
  sampler.sweep(z, K, rng);
  return z;
}

}  // namespace copulagraph
