// Acceptance criteria 1-8. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "copulagraph/commands.hpp"
#include "copulagraph/evalkit.hpp"
#include "copulagraph/simgen.hpp"

using namespace copulagraph;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Matrix gaussian_rows(const Matrix& sigma, std::size_t n, Rng& rng) {
  const Matrix L = cholesky(sigma);
  Matrix y(static_cast<Eigen::Index>(n), sigma.rows());
  Vector x(sigma.rows());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.size(); ++c) x(c) = rng.normal();
    y.row(r) = (L * x).transpose();
  }
  return y;
}

// ---- criterion 1 and the MCAR half of 8: exhaustive p=3 posterior ----

struct OracleProblem {
  MixedDataset data;
  std::map<std::string, double> posterior;  // fingerprint -> probability
};

OracleProblem oracle_problem() {
  Rng rng(42);
  Graph truth(3);
  truth.set_edge(Edge(0, 1), true);
  truth.set_edge(Edge(1, 2), true);
  const auto prec = sample_gwishart(truth, GWishartParams::identity(3), rng);
  const std::size_t n = 50;
  const Matrix y = gaussian_rows(spd_inverse(prec.K), n, rng);
  const Matrix dstar = Matrix::Identity(3, 3) + y.transpose() * y;
  std::map<std::string, double> lp;
  double mx = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < 8; ++m) {
    std::string fp;
    for (int k = 0; k < 3; ++k) fp.push_back((m >> k) & 1 ? '1' : '0');
    const Graph g = Graph::from_fingerprint(3, fp);
    Rng mc(derive_seed(7, static_cast<std::uint64_t>(m)));
    const auto post = mc_log_norm_constant(g, GWishartParams(3.0 + static_cast<double>(n), dstar), 100000, mc);
    const auto prior = mc_log_norm_constant(g, GWishartParams::identity(3), 100000, mc);
    lp[fp] = post.log_estimate - prior.log_estimate;
    mx = std::max(mx, lp[fp]);
  }
  double total = 0.0;
  for (auto& [fp, v] : lp) total += (v = std::exp(v - mx));
  for (auto& [fp, v] : lp) v /= total;
  return {MixedDataset(y, std::vector<VariableKind>(3, VariableKind::kContinuous)), lp};
}

double oracle_deviation(const OracleProblem& op, const MixedDataset& data, std::string* table) {
  ChainConfig cfg;
  cfg.iterations = 50000;
  cfg.burn_in = 10000;
  cfg.latent_mode = LatentMode::kGaussian;
  cfg.seed = 3;
  const ChainTrace t = run_chain(data, cfg);
  const auto gw = t.graph_weights();
  double dev = 0.0;
  std::ostringstream os;
  for (const auto& [fp, p] : op.posterior) {
    const auto it = gw.find(fp);
    const double chain = it == gw.end() ? 0.0 : it->second / t.total_weight;
    dev = std::max(dev, std::abs(chain - p));
    os << " " << fp << ":" << fmt("%.3f", p) << "/" << fmt("%.3f", chain);
  }
  if (table) *table = os.str();
  return dev;
}

Outcome criterion1(const OracleProblem& op) {
  std::string table;
  const double dev = oracle_deviation(op, op.data, &table);
  return {dev <= 0.05, "max |chain - oracle| = " + fmt("%.4f", dev) + " (tol 0.05); oracle/chain" + table};
}

// ---- criterion 2 ----

Outcome criterion2() {
  Rng rng(2024);
  bool ok = true;
  std::ostringstream os;
  for (int k = 0; k < 5; ++k) {
    const std::size_t p = 3 + static_cast<std::size_t>(rng.uniform_index(3));
    Graph g(p);
    while (g.edge_count() == 0) g = gen_graph(GraphFamily::kRandom, p, rng);
    const auto edges = g.edges();
    const Edge e = edges[rng.uniform_index(edges.size())];
    const Graph minus = toggle_edge(g, e);
    Rng mc(derive_seed(99, static_cast<std::uint64_t>(k)));
    const auto with = mc_log_norm_constant(g, GWishartParams::identity(p), 100000, mc);
    const auto without = mc_log_norm_constant(minus, GWishartParams::identity(p), 100000, mc);
    const double d = static_cast<double>(g.triangle_count(e));
    const double claimed = log_norm_ratio_identity(3.0, g.triangle_count(e));
    const double diff = with.log_estimate - without.log_estimate - claimed;
    const double se = std::hypot(with.std_error, without.std_error);
    const bool good = se > 0.0 ? std::abs(diff) <= 3.0 * se : std::abs(diff) <= 1e-9;
    ok = ok && good;
    os << " [p=" << p << " |E|=" << g.edge_count() << " d=" << d << " dlog=" << fmt("%.4f", diff)
       << " se=" << fmt("%.4f", se) << (good ? "" : " MISS") << "]";
  }
  return {ok, "log ratio minus identity within 3 SE:" + os.str()};
}

// ---- criterion 3 ----

Outcome criterion3() {
  Rng rng(33);
  double worst = 0.0;
  std::size_t failures = 0;
  for (int k = 0; k < 10000; ++k) {
    const Graph g = gen_graph(GraphFamily::kRandom, 5, rng);
    CompletionReport rep;
    try {
      const auto kp = sample_gwishart(g, GWishartParams::identity(5), rng, CompletionOptions{}, &rep);
      cholesky(kp.K);
      if (!matches_zero_pattern(kp.K, g, 0.0)) ++failures;
      worst = std::max(worst, rep.max_nonedge_before_writeback);
    } catch (const std::exception&) {
      ++failures;
    }
  }
  Matrix mean = Matrix::Zero(5, 5);
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) mean += sample_gwishart(Graph::complete(5), GWishartParams::identity(5), rng).K;
  mean /= draws;
  const Matrix target = 7.0 * Matrix::Identity(5, 5);  // (b + p - 1) D^{-1}
  // Off-diagonal targets are zero, so "within 5%" is measured against the diagonal scale.
  const double rel = (mean - target).cwiseAbs().maxCoeff() / 7.0;
  const bool ok = failures == 0 && worst <= 1e-8 && rel <= 0.05;
  return {ok, "failed draws " + std::to_string(failures) + ", max non-edge before write-back " +
                  fmt("%.2e", worst) + " (tol 1e-8), complete-graph mean max rel error " + fmt("%.4f", rel) +
                  " (tol 0.05)"};
}

// ---- criteria 4, 5, 7, 8: scenario (random, p=10, n=100) ----

struct Replicate {
  Graph truth;
  MixedDataset data;
  EdgeProbMatrix probs;
  double f1 = 0.0, mse = 0.0, auc = 0.0;
  RocCurve roc;
};

std::vector<Replicate> scenario_replicates() {
  std::vector<Replicate> reps;
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng rng(derive_seed(400, k));
    Graph g = gen_graph(GraphFamily::kRandom, 10, rng);
    const auto prec = gen_precision(g, rng);
    reps.push_back({g, gen_mixed_data(prec, 100, MarginalRecipe::cycle(10), rng), Matrix(), 0, 0, 0, {}});
  }
  return reps;
}

void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < std::min(jobs, count); ++w)
    pool.emplace_back([&] {
      for (std::size_t k; (k = next++) < count;) task(k);
    });
  for (auto& t : pool) t.join();
}

Outcome criterion4(std::vector<Replicate>& reps) {
  run_parallel(reps.size(), 4, [&](std::size_t k) {
    ChainConfig cfg;
    cfg.iterations = 20000;
    cfg.burn_in = 10000;
    cfg.seed = derive_seed(500, k);
    Replicate& r = reps[k];
    const ChainTrace t = run_chain(r.data, cfg);
    r.probs = edge_probabilities(t);
    r.f1 = f1_score(select_graph(r.probs, mean_precision(t), 0.5).graph, r.truth);
    r.mse = mse(r.probs, r.truth);
    r.roc = roc_points(r.probs, r.truth);
    r.auc = auc(r.roc);
  });
  double f1 = 0.0, m = 0.0;
  std::ostringstream os;
  for (const auto& r : reps) {
    f1 += r.f1 / static_cast<double>(reps.size());
    m += r.mse / static_cast<double>(reps.size());
    os << " " << fmt("%.2f", r.f1) << "/" << fmt("%.2f", r.mse);
  }
  const bool ok = std::abs(f1 - 0.71) <= 0.15 && m >= 3.96 / 2.0 && m <= 3.96 * 2.0;
  return {ok, "mean F1 " + fmt("%.3f", f1) + " (target 0.71 +/- 0.15), mean MSE " + fmt("%.3f", m) +
                  " (target [1.98, 7.92]); per replicate F1/MSE" + os.str()};
}

double tpr_at(const RocCurve& c, double x) {
  for (std::size_t k = 1; k < c.size(); ++k)
    if (c[k].fpr >= x) {
      const double span = c[k].fpr - c[k - 1].fpr;
      if (span <= 0.0) return c[k].tpr;
      return c[k - 1].tpr + (x - c[k - 1].fpr) / span * (c[k].tpr - c[k - 1].tpr);
    }
  return 1.0;
}

Outcome criterion5(const std::vector<Replicate>& reps) {
  double mean_auc = 0.0;
  for (const auto& r : reps) mean_auc += r.auc / static_cast<double>(reps.size());
  // Vertically averaged curve against the diagonal on an interior grid.
  double min_gap = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 100; ++k) {
    const double x = k / 100.0;
    double y = 0.0;
    for (const auto& r : reps) y += tpr_at(r.roc, x) / static_cast<double>(reps.size());
    min_gap = std::min(min_gap, y - x);
  }
  // Diagnostics only: replicates whose own curve stays on or above the diagonal.
  std::size_t above = 0;
  for (const auto& r : reps) {
    bool ok = true;
    for (const auto& pt : r.roc) ok = ok && pt.tpr >= pt.fpr;
    above += ok;
  }
  const bool ok = mean_auc >= 0.75 && min_gap > 0.0;
  return {ok, "mean AUC " + fmt("%.3f", mean_auc) + " (tol >= 0.75), min over fpr in (0,1) of mean TPR - FPR " +
                  fmt("%.3f", min_gap) + " (must be > 0); replicates never below the diagonal " +
                  std::to_string(above) + "/" + std::to_string(reps.size())};
}

Outcome criterion7(const Replicate& rep) {
  // The rank-likelihood latent layer mixes slowly on mixed data, so the chains
  // run long; the window matching criterion 4's length is reported alongside.
  const std::size_t chains = 10, iterations = 100000, burn_in = 50000;
  const std::size_t short_lo = 10000, short_hi = 20000;
  std::vector<double> means(chains), short_means(chains);
  Rng init(700);
  std::vector<Graph> starts;
  for (std::size_t c = 0; c < chains; ++c) {
    Graph g(10);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = i + 1; j < 10; ++j) g.set_edge(Edge(i, j), init.uniform() < 0.5);
    starts.push_back(g);
  }
  auto window_mean = [](const std::vector<std::size_t>& t, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += static_cast<double>(t[k]);
    return s / static_cast<double>(hi - lo);
  };
  run_parallel(chains, 4, [&](std::size_t c) {
    ChainConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = burn_in;
    cfg.thin = 0;
    cfg.seed = derive_seed(701, c);
    cfg.initial_graph = starts[c];
    const ChainTrace t = run_chain(rep.data, cfg);
    means[c] = window_mean(t.size_trace, burn_in, iterations);
    short_means[c] = window_mean(t.size_trace, short_lo, short_hi);
  });
  auto range = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  std::ostringstream os;
  for (double m : means) os << " " << fmt("%.2f", m);
  return {range(means) < 2.0, "max pairwise difference of post-burn-in mean sizes " + fmt("%.3f", range(means)) +
                                  " (tol < 2; 100k iterations, 50k burn-in); chain means" + os.str() +
                                  "; same chains over iterations 10k-20k: " + fmt("%.3f", range(short_means))};
}

// ---- criterion 6 ----

double ks_truncated(std::vector<double> x, double mu, double sd, double a, double b) {
  std::sort(x.begin(), x.end());
  const double sa = normal_sf((a - mu) / sd), sb = normal_sf((b - mu) / sd);
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f = (sa - normal_sf((x[k] - mu) / sd)) / (sa - sb);
    d = std::max({d, std::abs(f - static_cast<double>(k) / n), std::abs(f - static_cast<double>(k + 1) / n)});
  }
  return d;
}

Outcome criterion6() {
  Rng rng(60);
  const auto prec = gen_precision(gen_graph(GraphFamily::kRandom, 5, rng), rng);
  const auto data = gen_missing(gen_mixed_data(prec, 200, MarginalRecipe::cycle(5), rng), 0.1, rng);
  LatentMatrix z = initialize_latent(data, rng);
  LatentSampler sampler(data);
  bool ranks = is_rank_consistent(z, data);
  for (int s = 0; s < 1000 && ranks; ++s) {
    sampler.sweep(z, prec.K, rng);
    ranks = is_rank_consistent(z, data);
  }

  const Eigen::Index n = 20;
  MixedDataset empty(Matrix::Zero(n, 5), std::vector<VariableKind>(5, VariableKind::kContinuous),
                     MissingMask::Constant(n, 5, true));
  LatentMatrix w = initialize_latent(empty, rng);
  LatentSampler all_missing(empty);
  const Matrix sigma = spd_inverse(prec.K);
  Matrix acc = Matrix::Zero(5, 5);
  for (int s = 0; s < 200; ++s) all_missing.sweep(w, prec.K, rng);
  for (int s = 0; s < 10000; ++s) {
    all_missing.sweep(w, prec.K, rng);
    acc += w.transpose() * w;
  }
  acc /= 10000.0 * static_cast<double>(n);
  double cov_err = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      cov_err = std::max(cov_err, std::abs(acc(i, j) - sigma(i, j)) / std::sqrt(sigma(i, i) * sigma(j, j)));

  const double inf = std::numeric_limits<double>::infinity();
  const double cases[][4] = {{0, 1, -inf, inf}, {0, 1, 0, inf},   {1, 2, -inf, -1}, {0, 1, -0.5, 0.7},
                             {0.3, 0.5, 1, 1.2}, {0, 1, 2, 4},    {0, 1, 6.5, inf}, {0, 1, 8, 9},
                             {-2, 1, -inf, -9},  {0, 1, -3, -2.5}};
  double ks = 0.0;
  for (const auto& c : cases) {
    std::vector<double> x(100000);
    for (auto& v : x) v = sample_truncated_normal(c[0], c[1], {c[2], c[3]}, rng);
    ks = std::max(ks, ks_truncated(std::move(x), c[0], c[1], c[2], c[3]));
  }
  const bool ok = ranks && cov_err <= 0.05 && ks < 0.01;
  return {ok, std::string("rank consistent over 1000 sweeps: ") + (ranks ? "yes" : "NO") +
                  ", all-missing covariance max scaled error " + fmt("%.4f", cov_err) +
                  " (tol 0.05), worst truncated-normal KS " + fmt("%.4f", ks) + " (tol < 0.01)"};
}

// ---- criterion 8 ----

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().filename() == "run_meta.json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return files;
}

int cli(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  static std::string prog = "copulagraph";
  argv.push_back(prog.data());
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

bool cli_round(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const char* f : {"data.csv", "schema.txt", "fit.cfg", "ppc.cfg"})
    fs::copy_file(fs::path(EXAMPLE_DIR) / f, dir / f);
  std::ofstream(dir / "sim.cfg") << "seed = 11\nout = out/sim\nreplicates = 2\n"
                                    "scenario = random 6 60\nscenario = scale_free 6 60\n";
  std::ofstream(dir / "simfit.cfg") << "seed = 12\nsim_dir = out/sim\niterations = 1500\nburn_in = 500\njobs = 2\n";
  std::ofstream(dir / "eval.cfg") << "sim_dir = out/sim\nout = out/eval\n";
  const auto c = [&](const std::string& name) { return (dir / name).string(); };
  return cli({"simulate", "--config", c("sim.cfg")}) == 0 && cli({"fit", "--config", c("simfit.cfg")}) == 0 &&
         cli({"eval", "--config", c("eval.cfg")}) == 0 && cli({"fit", "--config", c("fit.cfg")}) == 0 &&
         cli({"ppc", "--config", c("ppc.cfg")}) == 0;
}

Outcome criterion8(const OracleProblem& op, const Replicate& rep) {
  const fs::path base = fs::temp_directory_path() / "copulagraph_acceptance";
  const bool ran = cli_round(base / "a") && cli_round(base / "b");
  const auto a = ran ? snapshot(base / "a" / "out") : std::map<std::string, std::string>{};
  const auto b = ran ? snapshot(base / "b" / "out") : std::map<std::string, std::string>{};
  const bool identical = ran && !a.empty() && a == b;
  fs::remove_all(base);

  Rng rng(800);
  const auto masked = gen_missing(rep.data, 0.10, rng);
  ChainConfig cfg;
  cfg.iterations = 20000;
  cfg.burn_in = 10000;
  cfg.seed = 801;
  const auto probs = edge_probabilities(run_chain(masked, cfg));
  const bool in_range = (probs.array() >= 0.0).all() && (probs.array() <= 1.0).all();

  const auto oracle_masked = gen_missing(op.data, 0.10, rng);
  const double dev = oracle_deviation(op, oracle_masked, nullptr);
  const bool ok = identical && in_range && dev <= 0.08;
  return {ok, std::string("CLI reruns byte-identical over ") + std::to_string(a.size()) +
                  " files: " + (identical ? "yes" : "NO") + ", MCAR edge probabilities in [0,1]: " +
                  (in_range ? "yes" : "NO") + ", MCAR oracle deviation " + fmt("%.4f", dev) + " (tol 0.08)"};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  bool all = true;
  auto report = [&](int id, const std::function<Outcome()>& fn) {
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    all = all && o.pass;
    std::printf("criterion %d: %s [%.1f s] %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  };

  const OracleProblem op = oracle_problem();
  std::vector<Replicate> reps = scenario_replicates();
  report(1, [&] { return criterion1(op); });
  report(2, criterion2);
  report(3, criterion3);
  report(4, [&] { return criterion4(reps); });
  report(5, [&] {
    if (reps.front().roc.empty()) return Outcome{false, "criterion 4 fits unavailable"};
    return criterion5(reps);
  });
  report(6, criterion6);
  report(7, [&] { return criterion7(reps.front()); });
  report(8, [&] { return criterion8(op, reps.front()); });
  return all ? 0 : 1;
}
