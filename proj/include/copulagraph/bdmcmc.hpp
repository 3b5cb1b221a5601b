#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "copulagraph/copula.hpp"
#include "copulagraph/graph.hpp"
#include "copulagraph/gwishart.hpp"
#include "copulagraph/numkit.hpp"

namespace copulagraph {

/// How the per-edge ratio of posterior marginals becomes a jump rate.
enum class RateForm {
  /// min(1, ratio): reverse moves satisfy detailed balance. Default.
  kBalanced,
  /// The ratio itself, clipped only at rate_cap. Reverse rates multiply to one,
  /// which squares the stationary odds; kept for diagnostics.
  kLiteral,
};

/// How sampler iterations map to continuous time.
enum class JumpClock {
  /// Uniformized clock: K is redrawn from its full conditional every iteration,
  /// a jump happens with probability (total rate) / (pair count), and every
  /// iteration carries the same weight. Default; weights stay bounded.
  kUniformized,
  /// Embedded jump chain: one jump per iteration weighted by 1 / (total rate)
  /// evaluated at a single K draw. Heavy-tailed weights; kept for comparison.
  kEmbedded,
};

struct ChainConfig {
  std::size_t iterations = 20000;
  std::size_t burn_in = 10000;
  double b_prior = 3.0;
  /// Graph prior P(G) proportional to exp(prior_edge_logit * |E|); 0 is uniform.
  double prior_edge_logit = 0.0;
  std::uint64_t seed = 1;
  /// Upper clip on any single rate, applied in log space.
  double rate_cap = std::exp(20.0);
  RateForm rate_form = RateForm::kBalanced;
  LatentMode latent_mode = LatentMode::kCopula;
  JumpClock clock = JumpClock::kUniformized;
  /// Keep every `thin`-th post-burn-in (graph, K) state for predictive checks; 0 keeps none.
  std::size_t thin = 100;
  /// Starting graph; empty graph when unset.
  std::optional<Graph> initial_graph;

  void validate() const;
};

/// Current sampler position plus the posterior sufficient statistics.
struct ChainState {
  ConstrainedPrecision precision;
  LatentMatrix z;
  Matrix dstar;  // D + z^T z with D = I
  double bstar = 0.0;

  const Graph& graph() const { return precision.graph; }
  const Matrix& K() const { return precision.K; }
  /// Recomputes dstar from z.
  void refresh_dstar();
};

/// Builds a state from explicit parts (D = I prior scale).
ChainState make_state(ConstrainedPrecision precision, LatentMatrix z, double b_prior);

/// Log of the death ratio P(G-e, K-e \ k_jj) / P(G, K \ (k_ij, k_jj)), uncapped. Requires e in G.
double log_death_ratio(const ChainState& state, const Edge& e, const ChainConfig& cfg);
/// Log of the birth ratio P(G+e, K+e \ (k_ij, k_jj)) / P(G, K \ k_jj), uncapped. Requires e not in G.
double log_birth_ratio(const ChainState& state, const Edge& e, const ChainConfig& cfg);

/// Applies the configured rate form and cap to a log ratio.
double log_rate_from_ratio(double log_ratio, const ChainConfig& cfg);

double death_rate(const ChainState& state, const Edge& e, const ChainConfig& cfg);
double birth_rate(const ChainState& state, const Edge& e, const ChainConfig& cfg);

enum class JumpKind { kBirth, kDeath };

struct StepResult {
  double waiting_time = 0.0;
  Edge edge;
  JumpKind kind = JumpKind::kBirth;
  bool jumped = true;
};

/// Thrown when every rate underflows; carries the offending log total.
class RateUnderflow : public std::runtime_error {
 public:
  RateUnderflow(const std::string& what, double log_total)
      : std::runtime_error(what), log_total_(log_total) {}
  double log_total() const noexcept { return log_total_; }

 private:
  double log_total_;
};

/// Index drawn with probability proportional to exp(log_weights[k]).
std::size_t sample_categorical_log(const std::vector<double>& log_weights, Rng& rng);

/// One birth-death jump from `state` (in place). The returned waiting time
/// belongs to the pre-jump graph.
StepResult step(ChainState& state, const ChainConfig& cfg, Rng& rng);

/// One uniformized tick: redraws K given the current graph and D*, then jumps
/// with probability (total rate) / (pair count). Requires balanced rates, which
/// are bounded by one. waiting_time is the constant tick length. `redrawn`, when
/// given, receives the pre-jump K.
StepResult tick(ChainState& state, const ChainConfig& cfg, Rng& rng, Matrix* redrawn = nullptr);

struct WeightedGraph {
  std::uint32_t graph_index = 0;  // into ChainTrace::graph_table
  double weight = 0.0;
};

struct StateSample {
  Graph graph;
  Matrix K;
  double weight = 0.0;
};

/// Post-burn-in output of one chain.
struct ChainTrace {
  std::size_t p = 0;
  std::vector<std::string> graph_table;  // fingerprints
  std::vector<WeightedGraph> weighted_graphs;
  Matrix edge_weight_acc;  // sum_t I(e in G_t) W_t
  Matrix k_weight_acc;     // sum_t K_t W_t
  double total_weight = 0.0;
  std::vector<std::size_t> size_trace;  // every iteration, including burn-in
  std::vector<double> waiting_trace;    // every iteration, including burn-in
  std::vector<StateSample> samples;

  explicit ChainTrace(std::size_t p = 0);

  /// Records one post-burn-in visit.
  void add(const Graph& g, const Matrix& K, double weight);
  /// Appends a visit by fingerprint only, leaving the accumulators alone.
  void add_graph_weight(const std::string& fingerprint, double weight);
  /// Total weight per visited graph fingerprint.
  std::unordered_map<std::string, double> graph_weights() const;
  /// Pools another trace over the same data and configuration.
  void merge(const ChainTrace& other);

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Full sampler: latent sweep, D* refresh and one jump per iteration.
ChainTrace run_chain(const MixedDataset& data, const ChainConfig& cfg);

using EdgeProbMatrix = Matrix;

/// Waiting-time weighted edge inclusion frequencies.
EdgeProbMatrix edge_probabilities(const ChainTrace& trace);
/// Waiting-time weighted mean precision matrix.
Matrix mean_precision(const ChainTrace& trace);

struct SelectedEdge {
  Edge edge;
  double prob = 0.0;
  int sign = 0;  // sign of the mean partial correlation
};

struct SelectedGraph {
  Graph graph;
  std::vector<SelectedEdge> edges;
};

/// Edges with probability strictly above threshold, signed by -k_ij / sqrt(k_ii k_jj) of mean_K.
SelectedGraph select_graph(const EdgeProbMatrix& probs, const Matrix& mean_K, double threshold);

}  // namespace copulagraph
