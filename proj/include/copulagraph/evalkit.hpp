#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "copulagraph/bdmcmc.hpp"
#include "copulagraph/copula.hpp"
#include "copulagraph/graph.hpp"

namespace copulagraph {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

ConfusionCounts confusion(const Graph& estimated, const Graph& truth);

/// 2TP / (2TP + FP + FN); 1 when both graphs are empty.
double f1_score(const Graph& estimated, const Graph& truth);

/// Sum over unordered pairs of (p_e - I(e in truth))^2.
double mse(const EdgeProbMatrix& probs, const Graph& truth);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};
using RocCurve = std::vector<RocPoint>;

/// Step curve over the distinct probabilities, (0,0) first and (1,1) last.
/// Throws std::invalid_argument when truth is empty or complete.
RocCurve roc_points(const EdgeProbMatrix& probs, const Graph& truth);
/// Trapezoidal area.
double auc(const RocCurve& curve);

/// Datasets drawn from the posterior predictive: a thinned (graph, K) state is
/// picked by weight, latent rows come from N(0, K^{-1}) and each column is mapped
/// through the scaled empirical quantile function of the observed column.
/// Output has no missing cells.
std::vector<MixedDataset> posterior_predictive_sample(const ChainTrace& trace, const MixedDataset& data,
                                                      std::size_t draws, Rng& rng);

/// Ordered bins over a numeric column, e.g. "0;1-45;46-90;91-135;>135".
/// Tokens: `v`, `a-b` (inclusive), `>v`, `>=v`, `<v`, `<=v`.
class BinSpec {
 public:
  static BinSpec parse(const std::string& text);
  std::size_t size() const { return bins_.size(); }
  const std::string& label(std::size_t k) const { return bins_[k].label; }
  /// First bin containing x.
  std::optional<std::size_t> find(double x) const;

 private:
  struct Bin {
    std::string label;
    double lo, hi;
    bool lo_open, hi_open;
  };
  std::vector<Bin> bins_;
};

struct ConditionalTable {
  std::vector<std::string> given_labels;
  std::vector<std::string> target_labels;
  Matrix freq;                        // given bins x target levels; NaN rows when empty
  std::vector<std::size_t> counts;    // rows per given bin
  bool empty(std::size_t bin) const { return counts[bin] == 0; }
};

/// Frequencies of the target column's levels (or target bins) within each bin
/// of the given column. Rows with either cell missing or outside every bin are
/// skipped. `target_levels`, when non-empty, fixes the level set so tables from
/// different datasets line up.
ConditionalTable conditional_histogram(const MixedDataset& data, std::size_t target, std::size_t given,
                                       const BinSpec& given_bins,
                                       const std::optional<BinSpec>& target_bins = std::nullopt,
                                       const std::vector<double>& target_levels = {});

/// Sorted distinct observed values of a column.
std::vector<double> observed_levels(const MixedDataset& data, std::size_t col);

}  // namespace copulagraph
