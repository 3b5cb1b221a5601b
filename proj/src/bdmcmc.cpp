#include "copulagraph/bdmcmc.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace copulagraph {

void ChainConfig::validate() const {
  if (iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (burn_in >= iterations) throw std::invalid_argument("burn_in must be smaller than iterations");
  if (!(b_prior > 2.0)) throw std::invalid_argument("b_prior must exceed 2");
  if (!(rate_cap > 0.0)) throw std::invalid_argument("rate_cap must be positive");
  if (!std::isfinite(prior_edge_logit)) throw std::invalid_argument("prior_edge_logit must be finite");
  if (clock == JumpClock::kUniformized && rate_form != RateForm::kBalanced)
    throw std::invalid_argument("the uniformized clock needs balanced rates");
}

void ChainState::refresh_dstar() {
  const Eigen::Index p = z.cols();
  dstar = Matrix::Identity(p, p);
  dstar.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  dstar = dstar.selfadjointView<Eigen::Lower>();
}

ChainState make_state(ConstrainedPrecision precision, LatentMatrix z, double b_prior) {
  ChainState s{std::move(precision), std::move(z), Matrix(), 0.0};
  s.bstar = b_prior + static_cast<double>(s.z.rows());
  s.refresh_dstar();
  return s;
}

namespace {

// Quantities shared by the birth and death ratio of pair (i, j), j the
// vertex whose diagonal entry is integrated out. With B = V \ {i, j} and
// K1 = K_{e,B} K_{B,B}^{-1} K_{B,e}: a11 = k_ii - K1_11, t = K1_12.
struct PairTerms {
  double a11;
  double t;
};

PairTerms pair_terms(const Matrix& K, const Matrix& sigma, const Edge& e) {
  const auto i = static_cast<Eigen::Index>(e.i);
  const auto j = static_cast<Eigen::Index>(e.j);
  if (K.rows() == 2) return {K(i, i), 0.0};
  // K_ee - K1 = (Sigma_ee)^{-1}
  const double sii = sigma(i, i), sjj = sigma(j, j), sij = sigma(i, j);
  const double det = sii * sjj - sij * sij;
  return {sjj / det, K(i, j) + sij / det};
}

// log of the Gaussian part: (D*_jj / (2 pi a11))^{1/2} H(K, D*).
double log_gaussian_factor(const Matrix& dstar, const Edge& e, const PairTerms& pt) {
  const auto i = static_cast<Eigen::Index>(e.i);
  const auto j = static_cast<Eigen::Index>(e.j);
  if (!(pt.a11 > 0.0) || !std::isfinite(pt.a11))
    throw std::runtime_error("rate: k_ii - k1_11 is not positive; precision matrix is corrupted");
  const double djj = dstar(j, j);
  const double q = dstar(i, j) * pt.a11 - djj * pt.t;
  const double log_h = -0.5 * q * q / (djj * pt.a11);
  return 0.5 * std::log(djj / (2.0 * std::numbers::pi * pt.a11)) + log_h;
}

double log_death_ratio_impl(const ChainState& s, const Matrix& sigma, const Edge& e,
                            const ChainConfig& cfg) {
  const std::size_t d = s.graph().triangle_count(e);
  return -cfg.prior_edge_logit + log_norm_ratio_identity(cfg.b_prior, d) +
         log_gaussian_factor(s.dstar, e, pair_terms(s.K(), sigma, e));
}

double log_birth_ratio_impl(const ChainState& s, const Matrix& sigma, const Edge& e,
                            const ChainConfig& cfg) {
  // Triangles through e are the same in G and G+e.
  const std::size_t d = s.graph().triangle_count(e);
  return cfg.prior_edge_logit - log_norm_ratio_identity(cfg.b_prior, d) -
         log_gaussian_factor(s.dstar, e, pair_terms(s.K(), sigma, e));
}

}  // namespace

double log_death_ratio(const ChainState& state, const Edge& e, const ChainConfig& cfg) {
  if (!state.graph().has_edge(e)) throw std::invalid_argument("death ratio needs an existing edge");
  return log_death_ratio_impl(state, spd_inverse(state.K()), e, cfg);
}

double log_birth_ratio(const ChainState& state, const Edge& e, const ChainConfig& cfg) {
  if (state.graph().has_edge(e)) throw std::invalid_argument("birth ratio needs a missing edge");
  return log_birth_ratio_impl(state, spd_inverse(state.K()), e, cfg);
}

double log_rate_from_ratio(double log_ratio, const ChainConfig& cfg) {
  double r = log_ratio;
  if (cfg.rate_form == RateForm::kBalanced) r = std::min(r, 0.0);
  return std::min(r, std::log(cfg.rate_cap));
}

double death_rate(const ChainState& state, const Edge& e, const ChainConfig& cfg) {
  return std::exp(log_rate_from_ratio(log_death_ratio(state, e, cfg), cfg));
}

double birth_rate(const ChainState& state, const Edge& e, const ChainConfig& cfg) {
  return std::exp(log_rate_from_ratio(log_birth_ratio(state, e, cfg), cfg));
}

std::size_t sample_categorical_log(const std::vector<double>& log_weights, Rng& rng) {
  if (log_weights.empty()) throw std::invalid_argument("categorical draw over no outcomes");
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(mx)) throw std::invalid_argument("categorical draw with no positive weight");
  std::vector<double> cum(log_weights.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    acc += std::exp(log_weights[k] - mx);
    cum[k] = acc;
  }
  const double u = rng.uniform() * acc;
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

namespace {

struct RateTable {
  std::vector<double> log_rates;
  std::vector<Edge> pairs;
  double log_total = 0.0;
};

RateTable all_rates(const ChainState& state, const ChainConfig& cfg) {
  const std::size_t p = state.graph().size();
  if (p < 2) throw std::invalid_argument("step: need at least two variables");
  const Matrix sigma = spd_inverse(state.K());
  RateTable out;
  out.log_rates.reserve(p * (p - 1) / 2);
  out.pairs.reserve(p * (p - 1) / 2);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const Edge e(i, j);
      const double lr = state.graph().has_edge(e) ? log_death_ratio_impl(state, sigma, e, cfg)
                                                  : log_birth_ratio_impl(state, sigma, e, cfg);
      out.log_rates.push_back(log_rate_from_ratio(lr, cfg));
      out.pairs.push_back(e);
    }
  out.log_total = log_sum_exp(out.log_rates);
  return out;
}

void jump(ChainState& state, const RateTable& rates, Rng& rng, StepResult& out) {
  const std::size_t pick = sample_categorical_log(rates.log_rates, rng);
  out.edge = rates.pairs[pick];
  out.kind = state.graph().has_edge(out.edge) ? JumpKind::kDeath : JumpKind::kBirth;
  Graph next = toggle_edge(state.graph(), out.edge);
  GWishartParams post(state.bstar, state.dstar);
  state.precision = sample_gwishart(next, post, rng);
}

}  // namespace

StepResult step(ChainState& state, const ChainConfig& cfg, Rng& rng) {
  const RateTable rates = all_rates(state, cfg);
  const double waiting = std::exp(-rates.log_total);
  if (!std::isfinite(rates.log_total) || !std::isfinite(waiting) || !(waiting > 0.0)) {
    throw RateUnderflow("step: total jump rate is zero or not representable (log total " +
                            std::to_string(rates.log_total) + ", edges " +
                            std::to_string(state.graph().edge_count()) + ")",
                        rates.log_total);
  }
  StepResult out;
  out.waiting_time = waiting;
  jump(state, rates, rng, out);
  return out;
}

StepResult tick(ChainState& state, const ChainConfig& cfg, Rng& rng, Matrix* redrawn) {
  if (cfg.rate_form != RateForm::kBalanced) throw std::invalid_argument("tick: needs balanced rates");
  const std::size_t p = state.graph().size();
  const double pairs = static_cast<double>(p * (p - 1) / 2);
  state.precision = sample_gwishart(state.graph(), GWishartParams(state.bstar, state.dstar), rng);
  if (redrawn) *redrawn = state.K();
  const RateTable rates = all_rates(state, cfg);
  StepResult out;
  out.waiting_time = 1.0 / pairs;
  out.jumped = std::log(rng.uniform()) < rates.log_total - std::log(pairs);
  if (out.jumped) jump(state, rates, rng, out);
  return out;
}

ChainTrace::ChainTrace(std::size_t p_)
    : p(p_),
      edge_weight_acc(Matrix::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_))),
      k_weight_acc(Matrix::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_))) {}

void ChainTrace::add_graph_weight(const std::string& fingerprint, double weight) {
  auto [it, inserted] = index_.try_emplace(fingerprint, static_cast<std::uint32_t>(graph_table.size()));
  if (inserted) graph_table.push_back(fingerprint);
  weighted_graphs.push_back({it->second, weight});
}

void ChainTrace::add(const Graph& g, const Matrix& K, double weight) {
  add_graph_weight(g.fingerprint(), weight);
  for (const Edge& e : g.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i);
    const auto j = static_cast<Eigen::Index>(e.j);
    edge_weight_acc(i, j) += weight;
    edge_weight_acc(j, i) += weight;
  }
  k_weight_acc += weight * K;
  total_weight += weight;
}

std::unordered_map<std::string, double> ChainTrace::graph_weights() const {
  std::unordered_map<std::string, double> out;
  for (const auto& wg : weighted_graphs) out[graph_table[wg.graph_index]] += wg.weight;
  return out;
}

void ChainTrace::merge(const ChainTrace& other) {
  if (other.p != p) throw std::invalid_argument("merge: traces differ in dimension");
  for (const auto& wg : other.weighted_graphs) add_graph_weight(other.graph_table[wg.graph_index], wg.weight);
  edge_weight_acc += other.edge_weight_acc;
  k_weight_acc += other.k_weight_acc;
  total_weight += other.total_weight;
  size_trace.insert(size_trace.end(), other.size_trace.begin(), other.size_trace.end());
  waiting_trace.insert(waiting_trace.end(), other.waiting_trace.begin(), other.waiting_trace.end());
  samples.insert(samples.end(), other.samples.begin(), other.samples.end());
}

ChainTrace run_chain(const MixedDataset& data, const ChainConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::size_t p = data.p();
  Rng rng(cfg.seed);
  Rng latent_rng = rng.split(1);
  Rng jump_rng = rng.split(2);

  Graph start = cfg.initial_graph.value_or(Graph(p));
  if (start.size() != p) throw std::invalid_argument("initial graph dimension differs from data");
  const auto ip = static_cast<Eigen::Index>(p);
  // Prior-mean diagonal start: E[k_ii] = b under W_G(b, I) for the empty graph.
  ConstrainedPrecision init{cfg.b_prior * Matrix::Identity(ip, ip), start};
  ChainState state = make_state(std::move(init), initialize_latent(data, latent_rng, cfg.latent_mode),
                                cfg.b_prior);
  LatentSampler sampler(data, cfg.latent_mode);

  ChainTrace trace(p);
  trace.size_trace.reserve(cfg.iterations);
  trace.waiting_trace.reserve(cfg.iterations);
  std::size_t kept = 0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    sampler.sweep(state.z, state.K(), latent_rng);
    state.refresh_dstar();
    StepResult res;
    const Graph before = state.graph();
    Matrix k_before;
    if (cfg.clock == JumpClock::kUniformized) {
      res = tick(state, cfg, jump_rng, &k_before);
    } else {
      k_before = state.K();
      res = step(state, cfg, jump_rng);
    }
    trace.size_trace.push_back(before.edge_count());
    trace.waiting_trace.push_back(res.waiting_time);
    if (it >= cfg.burn_in) {
      trace.add(before, k_before, res.waiting_time);
      if (cfg.thin > 0 && kept % cfg.thin == 0) trace.samples.push_back({before, k_before, res.waiting_time});
      ++kept;
    }
  }
  return trace;
}

EdgeProbMatrix edge_probabilities(const ChainTrace& trace) {
  if (!(trace.total_weight > 0.0)) throw std::invalid_argument("edge_probabilities: empty trace");
  EdgeProbMatrix out = trace.edge_weight_acc / trace.total_weight;
  out = out.cwiseMax(0.0).cwiseMin(1.0);
  out.diagonal().setZero();
  return out;
}

Matrix mean_precision(const ChainTrace& trace) {
  if (!(trace.total_weight > 0.0)) throw std::invalid_argument("mean_precision: empty trace");
  return trace.k_weight_acc / trace.total_weight;
}

SelectedGraph select_graph(const EdgeProbMatrix& probs, const Matrix& mean_K, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0,1)");
  const auto p = static_cast<std::size_t>(probs.rows());
  SelectedGraph out{Graph(p), {}};
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      if (!(probs(a, b) > threshold)) continue;
      const Edge e(i, j);
      out.graph.set_edge(e, true);
      const double pc = -mean_K(a, b) / std::sqrt(mean_K(a, a) * mean_K(b, b));
      out.edges.push_back({e, probs(a, b), pc > 0.0 ? 1 : (pc < 0.0 ? -1 : 0)});
    }
  return out;
}

}  // namespace copulagraph
