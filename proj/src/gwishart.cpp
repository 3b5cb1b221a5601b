#include "copulagraph/gwishart.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace copulagraph {

GWishartParams::GWishartParams(double b_, Matrix D_) : b(b_), D(std::move(D_)) {}

GWishartParams GWishartParams::identity(std::size_t p, double b) {
  const auto n = static_cast<Eigen::Index>(p);
  return GWishartParams(b, Matrix::Identity(n, n));
}

void GWishartParams::validate() const {
  if (!(b > 2.0)) throw std::invalid_argument("G-Wishart degrees of freedom must exceed 2");
  if (D.rows() == 0 || D.rows() != D.cols())
    throw std::invalid_argument("G-Wishart scale must be a nonempty square matrix");
  if (!D.isApprox(D.transpose(), 1e-12))
    throw std::invalid_argument("G-Wishart scale must be symmetric");
  cholesky(D);
}

Matrix sample_wishart_full(const GWishartParams& params, Rng& rng) {
  const Eigen::Index p = params.D.rows();
  const Matrix c = cholesky(params.D);  // D = C C^T, so D^{-1} = C^{-T} C^{-1}
  // Under this density convention K ~ Wishart(b + p - 1, D^{-1}).
  const double dof = params.b + static_cast<double>(p) - 1.0;
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Matrix m = c.transpose().triangularView<Eigen::Upper>().solve(a);
  Matrix k = m * m.transpose();
  return 0.5 * (k + k.transpose());
}

Matrix complete_covariance(const Matrix& sigma, const Graph& graph, const CompletionOptions& opts,
                           CompletionReport* report) {
  const auto p = static_cast<Eigen::Index>(graph.size());
  if (sigma.rows() != p) throw std::invalid_argument("complete_covariance: dimension mismatch");
  Matrix w = sigma;
  CompletionReport local;
  CompletionReport& rep = report ? *report : local;
  rep = CompletionReport{};
  if (graph.edge_count() == graph.max_edges()) return w;

  std::vector<std::vector<Eigen::Index>> nbrs(static_cast<std::size_t>(p));
  std::vector<std::vector<Eigen::Index>> others(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    for (std::size_t k : graph.neighbors(static_cast<std::size_t>(j)))
      nbrs[static_cast<std::size_t>(j)].push_back(static_cast<Eigen::Index>(k));
    for (Eigen::Index k = 0; k < p; ++k)
      if (k != j) others[static_cast<std::size_t>(j)].push_back(k);
  }

  Vector col(p);
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& nj = nbrs[static_cast<std::size_t>(j)];
      const auto& rest = others[static_cast<std::size_t>(j)];
      if (nj.empty()) {
        col.setZero();
      } else {
        // Edge entries of w never move off sigma, so sigma(N_j, j) is also the
        // current working value.
        const Matrix w_nn = w(nj, nj);
        const Vector s_nj = sigma(nj, std::vector<Eigen::Index>{j});
        const Vector beta = w_nn.llt().solve(s_nj);
        col = w(Eigen::all, nj) * beta;
      }
      for (Eigen::Index k : rest) {
        max_change = std::max(max_change, std::abs(col(k) - w(k, j)));
        w(k, j) = col(k);
        w(j, k) = col(k);
      }
    }
    rep.sweeps = sweep;
    rep.residual = max_change;
    rep.residual_history.push_back(max_change);
    if (max_change < opts.tolerance) return w;
  }
  throw ConvergenceError("covariance completion did not converge after " +
                             std::to_string(opts.max_sweeps) +
                             " sweeps (residual " + std::to_string(rep.residual) + ")",
                         rep.residual);
}

ConstrainedPrecision sample_gwishart(const Graph& graph, const GWishartParams& params, Rng& rng,
                                     const CompletionOptions& opts, CompletionReport* report) {
  if (params.dim() != graph.size()) throw std::invalid_argument("sample_gwishart: dimension mismatch");
  Matrix k = sample_wishart_full(params, rng);
  if (graph.edge_count() == graph.max_edges()) {
    if (report) *report = CompletionReport{};
    return {std::move(k), graph};
  }
  CompletionReport local;
  CompletionReport& rep = report ? *report : local;
  const auto p = static_cast<std::size_t>(k.rows());
  auto nonedge_max = [&](const Matrix& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j)
        if (!graph.has_edge(i, j))
          worst = std::max(worst, std::abs(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    return worst;
  };
  Matrix w = complete_covariance(spd_inverse(k), graph, opts, &rep);
  k = spd_inverse(w);
  double worst = nonedge_max(k);
  // A small change in the covariance can still leave non-edge precision
  // entries above tolerance; keep sweeping until those are zero too.
  while (worst > opts.tolerance) {
    if (rep.sweeps >= opts.max_sweeps)
      throw ConvergenceError("precision zero pattern not reached after " + std::to_string(rep.sweeps) +
                                 " sweeps (max non-edge entry " + std::to_string(worst) + ")",
                             worst);
    CompletionOptions one = opts;
    one.max_sweeps = 1;
    one.tolerance = std::numeric_limits<double>::infinity();
    CompletionReport extra;
    w = complete_covariance(w, graph, one, &extra);
    rep.sweeps += 1;
    rep.residual = extra.residual;
    rep.residual_history.push_back(extra.residual);
    k = spd_inverse(w);
    worst = nonedge_max(k);
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (!graph.has_edge(i, j)) {
        k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
        k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 0.0;
      }
  rep.max_nonedge_before_writeback = worst;
  cholesky(k);
  return {std::move(k), graph};
}

double log_norm_ratio_identity(double b, std::size_t d) {
  if (!(b > 2.0)) throw std::invalid_argument("log_norm_ratio_identity: b must exceed 2");
  const double dd = static_cast<double>(d);
  return std::log(2.0) + 0.5 * std::log(std::numbers::pi) + log_gamma(0.5 * (b + dd + 1.0)) -
         log_gamma(0.5 * (b + dd));
}

McEstimate mc_log_norm_constant(const Graph& graph, const GWishartParams& params,
                                std::size_t samples, Rng& rng) {
  if (samples < 1000) throw std::invalid_argument("mc_log_norm_constant: need at least 1000 samples");
  params.validate();
  const std::size_t p = graph.size();
  if (params.dim() != p) throw std::invalid_argument("mc_log_norm_constant: dimension mismatch");
  const auto ip = static_cast<Eigen::Index>(p);

  // D^{-1} = T^T T with T upper triangular.
  const Matrix t = cholesky(spd_inverse(params.D)).transpose();

  std::vector<double> nu(p, 0.0), d_above(p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (i != j && graph.has_edge(i, j)) {
        if (j > i)
          nu[i] += 1.0;
        else
          d_above[i] += 1.0;
      }

  double log_const = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const double a = params.b + nu[i];
    const auto ii = static_cast<Eigen::Index>(i);
    log_const += 0.5 * a * std::log(2.0) + log_gamma(0.5 * a) +
                 0.5 * nu[i] * std::log(2.0 * std::numbers::pi) +
                 (params.b + nu[i] + d_above[i]) * std::log(t(ii, ii));
  }

  if (graph.edge_count() == graph.max_edges()) return {log_const, 0.0};

  std::vector<double> log_w(samples);
  Matrix psi = Matrix::Zero(ip, ip);
  Matrix phi = Matrix::Zero(ip, ip);
  for (std::size_t s = 0; s < samples; ++s) {
    double penalty = 0.0;
    for (Eigen::Index i = 0; i < ip; ++i) {
      psi(i, i) = std::sqrt(rng.chi_square(params.b + nu[static_cast<std::size_t>(i)]));
      phi(i, i) = psi(i, i) * t(i, i);
      for (Eigen::Index j = i + 1; j < ip; ++j) {
        double partial = 0.0;  // sum_{k=i}^{j-1} psi_ik t_kj
        for (Eigen::Index k = i; k < j; ++k) partial += psi(i, k) * t(k, j);
        if (graph.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
          psi(i, j) = rng.normal();
          phi(i, j) = partial + psi(i, j) * t(j, j);
        } else {
          double acc = 0.0;
          for (Eigen::Index k = 0; k < i; ++k) acc += phi(k, i) * phi(k, j);
          phi(i, j) = -acc / phi(i, i);
          psi(i, j) = (phi(i, j) - partial) / t(j, j);
          penalty += psi(i, j) * psi(i, j);
        }
      }
    }
    log_w[s] = -0.5 * penalty;
  }

  const double n = static_cast<double>(samples);
  const double log_mean = log_sum_exp(log_w) - std::log(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_w) mx = std::max(mx, v);
  double sum = 0.0, sum2 = 0.0;
  for (double v : log_w) {
    const double w = std::exp(v - mx);
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 / n - mean * mean) * n / (n - 1.0));
  const double se_log = std::sqrt(var / n) / mean;
  return {log_const + log_mean, se_log};
}

bool matches_zero_pattern(const Matrix& K, const Graph& graph, double tol) {
  const std::size_t p = graph.size();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (!graph.has_edge(i, j) &&
          std::abs(K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > tol)
        return false;
  return true;
}

}  // namespace copulagraph
