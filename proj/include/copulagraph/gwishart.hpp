#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "copulagraph/graph.hpp"
#include "copulagraph/numkit.hpp"

namespace copulagraph {

/// Parameters of the G-Wishart law with density proportional to
/// |K|^{(b-2)/2} exp(-tr(D K) / 2) on precision matrices with the graph's zero pattern.
struct GWishartParams {
  double b = 3.0;
  Matrix D;

  GWishartParams() = default;
  GWishartParams(double b_, Matrix D_);

  /// b = 3, D = I_p.
  static GWishartParams identity(std::size_t p, double b = 3.0);

  std::size_t dim() const { return static_cast<std::size_t>(D.rows()); }
  /// Throws std::invalid_argument unless b > 2 and D is symmetric positive definite.
  void validate() const;
};

/// Precision matrix paired with the graph that fixes its zero pattern.
struct ConstrainedPrecision {
  Matrix K;
  Graph graph;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct CompletionOptions {
  double tolerance = 1e-8;
  int max_sweeps = 1000;
};

/// Diagnostics from the covariance completion loop.
struct CompletionReport {
  int sweeps = 0;
  double residual = 0.0;
  /// Max absolute change of the working covariance in each sweep.
  std::vector<double> residual_history;
  /// Largest |K_ij| over non-edges before they are overwritten with zero.
  double max_nonedge_before_writeback = 0.0;
};

/// Draw from the unrestricted law (complete graph) by Bartlett decomposition.
Matrix sample_wishart_full(const GWishartParams& params, Rng& rng);

/// Iterative completion of a covariance: keeps the diagonal and the entries on
/// edges of `graph`, fills the rest so that the inverse vanishes off the edges.
Matrix complete_covariance(const Matrix& sigma, const Graph& graph,
                           const CompletionOptions& opts = {}, CompletionReport* report = nullptr);

/// Exact draw from W_G(b, D): unrestricted draw, covariance completion, inversion.
ConstrainedPrecision sample_gwishart(const Graph& graph, const GWishartParams& params, Rng& rng,
                                     const CompletionOptions& opts = {},
                                     CompletionReport* report = nullptr);

/// log of I_G(b, I) / I_{G-e}(b, I) where d is the number of triangles containing e in G.
double log_norm_ratio_identity(double b, std::size_t d);

struct McEstimate {
  double log_estimate = 0.0;
  double std_error = 0.0;  // on the log scale
};

/// Monte Carlo estimate of log I_G(b, D) through the free-element
/// decomposition of the Cholesky factor of K. Requires samples >= 1000.
McEstimate mc_log_norm_constant(const Graph& graph, const GWishartParams& params,
                                std::size_t samples, Rng& rng);

/// True when |K_ij| <= tol for every non-edge.
bool matches_zero_pattern(const Matrix& K, const Graph& graph, double tol = 1e-8);

}  // namespace copulagraph
