#include "copulagraph/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace copulagraph {

ConfusionCounts confusion(const Graph& estimated, const Graph& truth) {
  if (estimated.size() != truth.size()) throw std::invalid_argument("confusion: dimension mismatch");
  ConfusionCounts c;
  const std::size_t p = truth.size();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const bool e = estimated.has_edge(i, j), t = truth.has_edge(i, j);
      if (e && t) ++c.tp;
      else if (e) ++c.fp;
      else if (t) ++c.fn;
      else ++c.tn;
    }
  return c;
}

double f1_score(const Graph& estimated, const Graph& truth) {
  const ConfusionCounts c = confusion(estimated, truth);
  const double denom = 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp + c.fn);
  if (denom == 0.0) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / denom;
}

double mse(const EdgeProbMatrix& probs, const Graph& truth) {
  const std::size_t p = truth.size();
  if (static_cast<std::size_t>(probs.rows()) != p || probs.rows() != probs.cols())
    throw std::invalid_argument("mse: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const double d = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                       (truth.has_edge(i, j) ? 1.0 : 0.0);
      s += d * d;
    }
  return s;
}

RocCurve roc_points(const EdgeProbMatrix& probs, const Graph& truth) {
  const std::size_t p = truth.size();
  if (static_cast<std::size_t>(probs.rows()) != p || probs.rows() != probs.cols())
    throw std::invalid_argument("roc_points: dimension mismatch");
  const std::size_t pos = truth.edge_count(), neg = truth.max_edges() - pos;
  if (pos == 0) throw std::invalid_argument("roc_points: true graph has no edges, TPR undefined");
  if (neg == 0) throw std::invalid_argument("roc_points: true graph is complete, FPR undefined");

  std::vector<std::pair<double, bool>> scored;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      scored.emplace_back(probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                          truth.has_edge(i, j));
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < scored.size();) {
    const double thr = scored[k].first;
    for (; k < scored.size() && scored[k].first == thr; ++k) (scored[k].second ? tp : fp)++;
    curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double a = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k)
    a += (curve[k].fpr - curve[k - 1].fpr) * 0.5 * (curve[k].tpr + curve[k - 1].tpr);
  return a;
}

std::vector<double> observed_levels(const MixedDataset& data, std::size_t col) {
  std::vector<double> v;
  for (std::size_t r = 0; r < data.n(); ++r)
    if (!data.is_missing(r, col))
      v.push_back(data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<MixedDataset> posterior_predictive_sample(const ChainTrace& trace, const MixedDataset& data,
                                                      std::size_t draws, Rng& rng) {
  if (trace.samples.empty()) throw std::invalid_argument("posterior predictive: trace holds no states");
  const std::size_t n = data.n(), p = data.p();
  if (trace.p != p) throw std::invalid_argument("posterior predictive: trace and data differ in dimension");

  // Sorted observed values per column; F_hat(y_(k)) = k / (m + 1).
  std::vector<std::vector<double>> sorted(p);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = 0; r < n; ++r)
      if (!data.is_missing(r, c))
        sorted[c].push_back(data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    std::sort(sorted[c].begin(), sorted[c].end());
  }

  std::vector<double> log_w;
  for (const auto& s : trace.samples) log_w.push_back(std::log(s.weight));

  std::vector<MixedDataset> out;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(p);
  for (std::size_t d = 0; d < draws; ++d) {
    const StateSample& st = trace.samples[sample_categorical_log(log_w, rng)];
    const Matrix sigma = spd_inverse(st.K);
    const Matrix chol = cholesky(sigma);
    Matrix y(rows, cols);
    Vector x(cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) x(c) = rng.normal();
      const Vector z = chol * x;
      for (Eigen::Index c = 0; c < cols; ++c) {
        const auto& col = sorted[static_cast<std::size_t>(c)];
        const double m = static_cast<double>(col.size());
        const double u = normal_cdf(z(c) / std::sqrt(sigma(c, c)));
        const double k = std::clamp(std::ceil(u * (m + 1.0)), 1.0, m);
        y(r, c) = col[static_cast<std::size_t>(k) - 1];
      }
    }
    MixedDataset ds(std::move(y), data.kinds);
    ds.names = data.names;
    out.push_back(std::move(ds));
  }
  return out;
}

namespace {

double parse_number(const std::string& s, const std::string& whole) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument("bad bin token '" + whole + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

BinSpec BinSpec::parse(const std::string& text) {
  BinSpec spec;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    const std::string tok = trim(text.substr(start, end - start));
    start = end + 1;
    if (tok.empty()) throw std::invalid_argument("empty bin in '" + text + "'");
    Bin b{tok, 0.0, 0.0, false, false};
    if (tok.rfind(">=", 0) == 0) {
      b.lo = parse_number(tok.substr(2), tok);
      b.hi = inf;
    } else if (tok.rfind("<=", 0) == 0) {
      b.lo = -inf;
      b.hi = parse_number(tok.substr(2), tok);
    } else if (tok[0] == '>') {
      b.lo = parse_number(tok.substr(1), tok);
      b.lo_open = true;
      b.hi = inf;
    } else if (tok[0] == '<') {
      b.lo = -inf;
      b.hi = parse_number(tok.substr(1), tok);
      b.hi_open = true;
    } else {
      const std::size_t dash = tok.find('-', 1);
      if (dash == std::string::npos) {
        b.lo = b.hi = parse_number(tok, tok);
      } else {
        b.lo = parse_number(trim(tok.substr(0, dash)), tok);
        b.hi = parse_number(trim(tok.substr(dash + 1)), tok);
        if (b.hi < b.lo) throw std::invalid_argument("bin range reversed in '" + tok + "'");
      }
    }
    spec.bins_.push_back(b);
    if (end == text.size()) break;
  }
  return spec;
}

std::optional<std::size_t> BinSpec::find(double x) const {
  for (std::size_t k = 0; k < bins_.size(); ++k) {
    const Bin& b = bins_[k];
    const bool above = b.lo_open ? x > b.lo : x >= b.lo;
    const bool below = b.hi_open ? x < b.hi : x <= b.hi;
    if (above && below) return k;
  }
  return std::nullopt;
}

namespace {

std::string format_level(double v) {
  if (v == std::round(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ConditionalTable conditional_histogram(const MixedDataset& data, std::size_t target, std::size_t given,
                                       const BinSpec& given_bins, const std::optional<BinSpec>& target_bins,
                                       const std::vector<double>& target_levels) {
  if (target >= data.p() || given >= data.p()) throw std::invalid_argument("conditional_histogram: unknown column");
  if (target == given) throw std::invalid_argument("conditional_histogram: target and given must differ");

  ConditionalTable t;
  for (std::size_t k = 0; k < given_bins.size(); ++k) t.given_labels.push_back(given_bins.label(k));
  std::vector<double> levels;
  if (target_bins) {
    for (std::size_t k = 0; k < target_bins->size(); ++k) t.target_labels.push_back(target_bins->label(k));
  } else {
    levels = target_levels.empty() ? observed_levels(data, target) : target_levels;
    for (double v : levels) t.target_labels.push_back(format_level(v));
  }
  const auto nb = static_cast<Eigen::Index>(t.given_labels.size());
  const auto nl = static_cast<Eigen::Index>(t.target_labels.size());
  Matrix counts = Matrix::Zero(nb, nl);
  t.counts.assign(t.given_labels.size(), 0);
  for (std::size_t r = 0; r < data.n(); ++r) {
    if (data.is_missing(r, target) || data.is_missing(r, given)) continue;
    const auto g = given_bins.find(data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(given)));
    if (!g) continue;
    const double yv = data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(target));
    std::optional<std::size_t> l;
    if (target_bins) {
      l = target_bins->find(yv);
    } else {
      const auto it = std::lower_bound(levels.begin(), levels.end(), yv);
      if (it != levels.end() && *it == yv) l = static_cast<std::size_t>(it - levels.begin());
    }
    if (!l) continue;
    counts(static_cast<Eigen::Index>(*g), static_cast<Eigen::Index>(*l)) += 1.0;
    ++t.counts[*g];
  }
  t.freq = counts;
  for (Eigen::Index b = 0; b < nb; ++b) {
    if (t.counts[static_cast<std::size_t>(b)] == 0)
      t.freq.row(b).setConstant(std::numeric_limits<double>::quiet_NaN());
    else
      t.freq.row(b) /= static_cast<double>(t.counts[static_cast<std::size_t>(b)]);
  }
  return t;
}

}  // namespace copulagraph
