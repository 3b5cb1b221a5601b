#include "copulagraph/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/poisson.hpp>

namespace copulagraph {

std::string_view to_string(GraphFamily family) {
  switch (family) {
    case GraphFamily::kRandom: return "random";
    case GraphFamily::kCluster: return "cluster";
    case GraphFamily::kScaleFree: return "scale_free";
  }
  return "unknown";
}

GraphFamily parse_graph_family(std::string_view name) {
  if (name == "random") return GraphFamily::kRandom;
  if (name == "cluster") return GraphFamily::kCluster;
  if (name == "scale_free") return GraphFamily::kScaleFree;
  throw std::invalid_argument("unknown graph family '" + std::string(name) + "'");
}

namespace {

void fill_random(Graph& g, const std::vector<std::size_t>& vertices, Rng& rng) {
  const std::size_t s = vertices.size();
  if (s < 2) return;
  const double prob = std::min(1.0, 2.0 / static_cast<double>(s - 1));
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = a + 1; b < s; ++b)
      if (rng.bernoulli(prob)) g.set_edge(Edge(vertices[a], vertices[b]), true);
}

}  // namespace

std::vector<std::size_t> cluster_blocks(std::size_t p) {
  const std::size_t k = std::max<std::size_t>(2, p / 20);
  std::vector<std::size_t> out(p);
  // First p % k blocks get one extra vertex.
  const std::size_t base = p / k, extra = p % k;
  std::size_t v = 0;
  for (std::size_t b = 0; b < k; ++b)
    for (std::size_t c = 0; c < base + (b < extra ? 1 : 0); ++c) out[v++] = b;
  return out;
}

Graph gen_graph(GraphFamily family, std::size_t p, Rng& rng) {
  if (p < 2) throw std::invalid_argument("gen_graph: need p >= 2");
  Graph g(p);
  switch (family) {
    case GraphFamily::kRandom: {
      std::vector<std::size_t> all(p);
      for (std::size_t v = 0; v < p; ++v) all[v] = v;
      fill_random(g, all, rng);
      break;
    }
    case GraphFamily::kCluster: {
      const auto blocks = cluster_blocks(p);
      const std::size_t k = blocks.back() + 1;
      for (std::size_t b = 0; b < k; ++b) {
        std::vector<std::size_t> members;
        for (std::size_t v = 0; v < p; ++v)
          if (blocks[v] == b) members.push_back(v);
        fill_random(g, members, rng);
      }
      break;
    }
    case GraphFamily::kScaleFree: {
      g.set_edge(Edge(0, 1), true);
      // Each edge end appears once, so a uniform pick is degree-proportional.
      std::vector<std::size_t> ends{0, 1};
      for (std::size_t v = 2; v < p; ++v) {
        const std::size_t target = ends[rng.uniform_index(ends.size())];
        g.set_edge(Edge(v, target), true);
        ends.push_back(v);
        ends.push_back(target);
      }
      break;
    }
  }
  return g;
}

ConstrainedPrecision gen_precision(const Graph& graph, Rng& rng) {
  return sample_gwishart(graph, GWishartParams::identity(graph.size(), 3.0), rng);
}

std::string_view to_string(MarginalKind kind) {
  switch (kind) {
    case MarginalKind::kGaussian: return "gaussian";
    case MarginalKind::kNonGaussian: return "non_gaussian";
    case MarginalKind::kOrdinal: return "ordinal";
    case MarginalKind::kCount: return "count";
    case MarginalKind::kBinary: return "binary";
  }
  return "unknown";
}

MarginalKind parse_marginal_kind(std::string_view name) {
  if (name == "gaussian") return MarginalKind::kGaussian;
  if (name == "non_gaussian") return MarginalKind::kNonGaussian;
  if (name == "ordinal") return MarginalKind::kOrdinal;
  if (name == "count") return MarginalKind::kCount;
  if (name == "binary") return MarginalKind::kBinary;
  throw std::invalid_argument("unknown marginal kind '" + std::string(name) + "'");
}

VariableKind observed_kind(MarginalKind kind) {
  switch (kind) {
    case MarginalKind::kGaussian:
    case MarginalKind::kNonGaussian: return VariableKind::kContinuous;
    case MarginalKind::kOrdinal: return VariableKind::kOrdinal;
    case MarginalKind::kCount: return VariableKind::kCount;
    case MarginalKind::kBinary: return VariableKind::kBinary;
  }
  return VariableKind::kContinuous;
}

MarginalRecipe MarginalRecipe::cycle(std::size_t p) {
  static constexpr MarginalKind order[] = {MarginalKind::kGaussian, MarginalKind::kNonGaussian,
                                           MarginalKind::kOrdinal, MarginalKind::kCount,
                                           MarginalKind::kBinary};
  MarginalRecipe r;
  for (std::size_t c = 0; c < p; ++c) r.kinds.push_back(order[c % 5]);
  return r;
}

MarginalRecipe MarginalRecipe::uniform(std::size_t p, MarginalKind kind) {
  MarginalRecipe r;
  r.kinds.assign(p, kind);
  return r;
}

void MarginalRecipe::validate() const {
  if (ordinal_levels < 3) throw std::invalid_argument("ordinal recipe needs at least 3 levels");
  if (!(count_rate > 0.0)) throw std::invalid_argument("count rate must be positive");
  if (!(binary_split > 0.0 && binary_split < 1.0))
    throw std::invalid_argument("binary split must lie in (0,1)");
}

MixedDataset gen_mixed_data(const ConstrainedPrecision& precision, std::size_t n,
                            const MarginalRecipe& recipe, Rng& rng, Matrix* latent) {
  if (n < 2) throw std::invalid_argument("gen_mixed_data: need n >= 2");
  recipe.validate();
  const auto p = precision.K.rows();
  if (recipe.kinds.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("gen_mixed_data: recipe needs one kind per column");
  const Matrix sigma = spd_inverse(precision.K);
  const Matrix chol = cholesky(sigma);
  const auto rows = static_cast<Eigen::Index>(n);

  Matrix z(rows, p);
  Vector x(p);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) x(c) = rng.normal();
    z.row(r) = (chol * x).transpose();
  }

  namespace bm = boost::math;
  using Policy = bm::policies::policy<bm::policies::discrete_quantile<bm::policies::integer_round_up>>;
  const bm::poisson_distribution<double, Policy> poisson(recipe.count_rate);
  const double levels = static_cast<double>(recipe.ordinal_levels);

  Matrix y(rows, p);
  std::vector<VariableKind> kinds;
  for (Eigen::Index c = 0; c < p; ++c) {
    const MarginalKind kind = recipe.kinds[static_cast<std::size_t>(c)];
    kinds.push_back(observed_kind(kind));
    const double sd = std::sqrt(sigma(c, c));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double v = z(r, c);
      const double u = normal_cdf(v / sd);
      switch (kind) {
        case MarginalKind::kGaussian: y(r, c) = v; break;
        case MarginalKind::kNonGaussian: y(r, c) = std::exp(v); break;
        case MarginalKind::kOrdinal:
          y(r, c) = std::min(levels - 1.0, std::floor(u * levels));
          break;
        case MarginalKind::kCount:
          y(r, c) = bm::quantile(poisson, std::clamp(u, 1e-300, 1.0 - 1e-16));
          break;
        case MarginalKind::kBinary: y(r, c) = u > recipe.binary_split ? 1.0 : 0.0; break;
      }
    }
  }
  if (latent) *latent = z;
  return MixedDataset(std::move(y), std::move(kinds));
}

MixedDataset gen_missing(MixedDataset data, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("missing fraction must lie in [0,1)");
  const auto n = data.values.rows();
  const MissingMask before = data.missing;
  for (Eigen::Index c = 0; c < data.values.cols(); ++c) {
    for (;;) {
      bool any_observed = false;
      for (Eigen::Index r = 0; r < n; ++r) {
        data.missing(r, c) = before(r, c) || (fraction > 0.0 && rng.bernoulli(fraction));
        any_observed = any_observed || !data.missing(r, c);
      }
      if (any_observed || (before.col(c).all())) break;
    }
  }
  return data;
}

}  // namespace copulagraph
