#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "copulagraph/copula.hpp"
#include "copulagraph/graph.hpp"
#include "copulagraph/gwishart.hpp"
#include "copulagraph/numkit.hpp"

namespace copulagraph {

enum class GraphFamily { kRandom, kCluster, kScaleFree };

std::string_view to_string(GraphFamily family);
/// Accepts random, cluster, scale_free.
GraphFamily parse_graph_family(std::string_view name);

/// random: each pair with probability 2/(p-1). cluster: max(2, p/20) near-equal
/// blocks, each a random graph, no edges between blocks. scale_free:
/// Barabasi-Albert from a connected pair, one edge per arriving vertex.
/// Throws std::invalid_argument for p < 2.
Graph gen_graph(GraphFamily family, std::size_t p, Rng& rng);

/// Block index per vertex for the cluster family.
std::vector<std::size_t> cluster_blocks(std::size_t p);

/// K ~ W_G(3, I).
ConstrainedPrecision gen_precision(const Graph& graph, Rng& rng);

enum class MarginalKind { kGaussian, kNonGaussian, kOrdinal, kCount, kBinary };

std::string_view to_string(MarginalKind kind);
MarginalKind parse_marginal_kind(std::string_view name);
VariableKind observed_kind(MarginalKind kind);

struct MarginalRecipe {
  std::vector<MarginalKind> kinds;  // one per column
  std::size_t ordinal_levels = 4;
  double count_rate = 4.0;
  double binary_split = 0.5;

  /// Cycles gaussian, non_gaussian, ordinal, count, binary across p columns.
  static MarginalRecipe cycle(std::size_t p);
  static MarginalRecipe uniform(std::size_t p, MarginalKind kind);
  void validate() const;
};

/// n latent rows from N(0, K^{-1}) mapped column-wise through the recipe.
/// Ordinal levels are 0..L-1, binary 0/1, counts nonnegative integers.
/// `latent`, when given, receives the latent rows.
MixedDataset gen_mixed_data(const ConstrainedPrecision& precision, std::size_t n,
                            const MarginalRecipe& recipe, Rng& rng, Matrix* latent = nullptr);

/// Masks each cell independently with probability `fraction`, redrawing any
/// column that would end up fully masked.
MixedDataset gen_missing(MixedDataset data, double fraction, Rng& rng);

}  // namespace copulagraph
