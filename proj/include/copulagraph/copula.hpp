#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "copulagraph/numkit.hpp"

namespace copulagraph {

enum class VariableKind { kContinuous, kOrdinal, kCount, kBinary };

std::string_view to_string(VariableKind kind);
/// Accepts continuous, ordinal, count, binary. Throws std::invalid_argument otherwise.
VariableKind parse_variable_kind(std::string_view name);
inline bool is_discrete(VariableKind k) { return k != VariableKind::kContinuous; }

using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Observed n x p table of mixed-type variables. Discrete cells hold level codes.
struct MixedDataset {
  Matrix values;
  std::vector<VariableKind> kinds;
  MissingMask missing;
  std::vector<std::string> names;  // optional, one per column when present

  MixedDataset() = default;
  MixedDataset(Matrix values_, std::vector<VariableKind> kinds_);
  MixedDataset(Matrix values_, std::vector<VariableKind> kinds_, MissingMask missing_);

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(values.cols()); }
  bool is_missing(std::size_t row, std::size_t col) const {
    return missing(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }
  std::string column_name(std::size_t col) const;

  /// Throws std::invalid_argument on shape or level violations.
  void validate() const;
};

using LatentMatrix = Matrix;

/// How observed cells constrain the latent matrix.
enum class LatentMode {
  /// Extended rank likelihood: observed cells only fix within-column order.
  kCopula,
  /// Observed cells are the latent values; only missing cells are imputed.
  kGaussian,
};

/// Bounds on latent cell `row` implied by the strict orderings of the observed column.
/// Scans every row; the sampler uses an equivalent grouped fast path.
TruncationInterval truncation_bounds(const Vector& z_col, const Vector& y_col, std::size_t row,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& missing_col);

/// Normal-score start: Phi^{-1}(mid-rank / (n_obs + 1)) with small tie jitter.
LatentMatrix initialize_latent(const MixedDataset& data, Rng& rng,
                               LatentMode mode = LatentMode::kCopula);

/// y_s < y_r implies z_s < z_r for every column and non-missing pair.
bool is_rank_consistent(const LatentMatrix& z, const MixedDataset& data);

/// Systematic-scan Gibbs sampler over latent cells, with the per-column level
/// grouping precomputed once per dataset.
class LatentSampler {
 public:
  explicit LatentSampler(const MixedDataset& data, LatentMode mode = LatentMode::kCopula);

  /// One sweep: variables outer, rows inner, ascending. Bounds follow the live column.
  void sweep(LatentMatrix& z, const Matrix& K, Rng& rng) const;

  LatentMode mode() const { return mode_; }

 private:
  struct Column {
    std::vector<int> group;                      // per row, -1 when missing
    std::vector<std::vector<std::size_t>> rows;  // rows per level, ascending level
  };

  const MixedDataset* data_;
  LatentMode mode_;
  std::vector<Column> columns_;
};

/// Convenience single sweep; see LatentSampler.
LatentMatrix gibbs_update_latent(LatentMatrix z, const Matrix& K, const MixedDataset& data, Rng& rng,
                                 LatentMode mode = LatentMode::kCopula);

}  // namespace copulagraph
