#include "copulagraph/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "copulagraph/csv_io.hpp"
#include "copulagraph/evalkit.hpp"
#include "copulagraph/simgen.hpp"

namespace copulagraph {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Runs task(k) for k in [0, count) on up to `jobs` threads; rethrows the first failure.
template <class Task>
void run_pool(std::size_t count, std::size_t jobs, Task task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next++;
      if (k >= count) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        task(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, count));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Replicate directories (those holding data.csv) below root, sorted.
std::vector<fs::path> replicate_dirs(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == "data.csv") out.push_back(e.path().parent_path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no replicate data.csv found under " + root.string());
  return out;
}

ordered_json config_echo(const KeyValueConfig& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& [key, values] : cfg.entries()) {
    if (values.size() == 1)
      j[key] = values.front();
    else
      j[key] = values;
  }
  return j;
}

std::string rate_form_name(RateForm f) { return f == RateForm::kBalanced ? "balanced" : "literal"; }
std::string clock_name(JumpClock c) { return c == JumpClock::kUniformized ? "uniformized" : "embedded"; }
std::string latent_name(LatentMode m) { return m == LatentMode::kCopula ? "copula" : "gaussian"; }

Graph read_truth(const fs::path& dir, std::size_t p) {
  std::ifstream in(dir / "truth_graph.edgelist");
  if (!in) throw std::runtime_error("missing " + (dir / "truth_graph.edgelist").string());
  return read_edge_list(in, p);
}

Matrix read_matrix_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  return read_matrix_csv(in);
}

}  // namespace

void save_trace(const fs::path& path, const ChainTrace& trace) {
  auto mat = [](const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  ordered_json j;
  j["p"] = trace.p;
  j["total_weight"] = trace.total_weight;
  j["edge_weight_acc"] = mat(trace.edge_weight_acc);
  j["k_weight_acc"] = mat(trace.k_weight_acc);
  std::map<std::string, double> gw;
  for (const auto& [fp, w] : trace.graph_weights()) gw[fp] = w;
  ordered_json graphs = ordered_json::object();
  for (const auto& [fp, w] : gw) graphs[fp] = w;
  j["graph_weights"] = graphs;
  ordered_json samples = ordered_json::array();
  for (const auto& s : trace.samples)
    samples.push_back({{"graph", s.graph.fingerprint()}, {"weight", s.weight}, {"K", mat(s.K)}});
  j["samples"] = samples;
  open_out(path) << j.dump(1) << '\n';
}

ChainTrace load_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing trace file " + path.string());
  const ordered_json j = ordered_json::parse(in);
  const std::size_t p = j.at("p").get<std::size_t>();
  auto mat = [p](const ordered_json& rows) {
    const auto n = static_cast<Eigen::Index>(p);
    Matrix m(n, n);
    if (rows.size() != p) throw std::runtime_error("trace: matrix has wrong size");
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c)
        m(r, c) = rows.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
  };
  ChainTrace t(p);
  t.total_weight = j.at("total_weight").get<double>();
  t.edge_weight_acc = mat(j.at("edge_weight_acc"));
  t.k_weight_acc = mat(j.at("k_weight_acc"));
  for (const auto& [fp, w] : j.at("graph_weights").items()) t.add_graph_weight(fp, w.get<double>());
  for (const auto& s : j.at("samples"))
    t.samples.push_back({Graph::from_fingerprint(p, s.at("graph").get<std::string>()), mat(s.at("K")),
                         s.at("weight").get<double>()});
  return t;
}

void fit_one(const MixedDataset& data, const ChainConfig& chain, double threshold, const KeyValueConfig& echo,
             const fs::path& dir) {
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();
  const ChainTrace trace = run_chain(data, chain);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const EdgeProbMatrix probs = edge_probabilities(trace);
  const Matrix mean_k = mean_precision(trace);
  const SelectedGraph sel = select_graph(probs, mean_k, threshold);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < data.p(); ++c) names.push_back(data.column_name(c));

  {
    auto out = open_out(dir / "edge_probs.csv");
    write_matrix_csv(out, probs, names);
  }
  {
    auto out = open_out(dir / "selected_edges.csv");
    for (const auto& e : sel.edges) out << e.edge.i << ' ' << e.edge.j << ' ' << fmt6(e.prob) << ' ' << e.sign << '\n';
  }
  {
    std::vector<std::string> labels;
    for (const auto& e : sel.edges) labels.push_back(e.sign < 0 ? "−" : "+");
    auto out = open_out(dir / "graph.dot");
    write_dot(out, sel.graph, names, labels);
  }
  {
    auto out = open_out(dir / "size_trace.csv");
    out << "iteration,edge_count,waiting_time\n";
    for (std::size_t t = 0; t < trace.size_trace.size(); ++t)
      out << t << ',' << trace.size_trace[t] << ',' << fmt6(trace.waiting_trace[t]) << '\n';
  }
  save_trace(dir / "trace.json", trace);

  ordered_json meta;
  meta["seed"] = chain.seed;
  meta["n"] = data.n();
  meta["p"] = data.p();
  meta["threshold"] = threshold;
  meta["chain"] = {{"iterations", chain.iterations},   {"burn_in", chain.burn_in},
                   {"b_prior", chain.b_prior},         {"prior_edge_logit", chain.prior_edge_logit},
                   {"log_rate_cap", std::log(chain.rate_cap)}, {"rate_form", rate_form_name(chain.rate_form)},
                   {"clock", clock_name(chain.clock)}, {"latent", latent_name(chain.latent_mode)},
                   {"thin", chain.thin}};
  meta["config"] = config_echo(echo);
  meta["selected_edges"] = sel.edges.size();
  meta["wall_time_seconds"] = wall;
  open_out(dir / "run_meta.json") << meta.dump(2) << '\n';
}

void cmd_simulate(const KeyValueConfig& cfg, std::ostream& log) {
  const auto out_opt = cfg.path("out");
  if (!out_opt) throw ConfigError("simulate needs 'out'");
  const fs::path out = *out_opt;
  const auto scenarios = scenarios_from(cfg);
  const std::uint64_t replicates = cfg.count("replicates", 1);
  if (replicates == 0) throw ConfigError("replicates must be positive");
  const std::uint64_t seed = cfg.count("seed", 1);
  const double missing = cfg.number("missing_fraction", 0.0);
  if (!(missing >= 0.0 && missing < 1.0)) throw ConfigError("missing_fraction must lie in [0,1)");

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const ScenarioSpec& sc = scenarios[s];
    const MarginalRecipe recipe = recipe_from(cfg, sc.p);
    for (std::uint64_t k = 0; k < replicates; ++k) {
      Rng rng(derive_seed(derive_seed(seed, s), k));
      const Graph g = gen_graph(sc.family, sc.p, rng);
      const ConstrainedPrecision prec = gen_precision(g, rng);
      MixedDataset ds = gen_mixed_data(prec, sc.n, recipe, rng);
      if (missing > 0.0) ds = gen_missing(std::move(ds), missing, rng);
      for (std::size_t c = 0; c < sc.p; ++c) ds.names.push_back("V" + std::to_string(c + 1));

      char rep[32];
      std::snprintf(rep, sizeof rep, "rep_%03llu", static_cast<unsigned long long>(k));
      const fs::path dir = out / sc.id() / rep;
      fs::create_directories(dir);
      const Schema schema = schema_for(ds);
      { auto f = open_out(dir / "schema.txt"); write_schema(f, schema); }
      { auto f = open_out(dir / "data.csv"); write_data_csv(f, ds, schema); }
      { auto f = open_out(dir / "truth_graph.edgelist"); write_edge_list(f, g); }
      { auto f = open_out(dir / "truth_precision.csv"); write_matrix_csv(f, prec.K); }
    }
    log << "simulated " << replicates << " replicate(s) of " << sc.id() << '\n';
  }
}

void cmd_fit(const KeyValueConfig& cfg, std::ostream& log) {
  const ChainConfig base = chain_config_from(cfg);
  const double threshold = threshold_from(cfg);
  if (cfg.has("sim_dir")) {
    const auto dirs = replicate_dirs(cfg.existing_path("sim_dir"));
    std::mutex log_mu;
    run_pool(dirs.size(), jobs_from(cfg), [&](std::size_t k) {
      const MixedDataset ds = ingest_csv(dirs[k] / "data.csv", dirs[k] / "schema.txt");
      ChainConfig chain = base;
      chain.seed = derive_seed(base.seed, k);
      fit_one(ds, chain, threshold, cfg, dirs[k] / "fit");
      std::lock_guard lock(log_mu);
      log << "fitted " << dirs[k].string() << '\n';
    });
    return;
  }
  const MixedDataset ds = ingest_csv(cfg.existing_path("data"), cfg.existing_path("schema"));
  const auto out = cfg.path("out");
  if (!out) throw ConfigError("fit needs 'out' (or 'sim_dir')");
  fit_one(ds, base, threshold, cfg, *out);
  log << "wrote fit outputs to " << out->string() << '\n';
}

void cmd_eval(const KeyValueConfig& cfg, std::ostream& log) {
  const fs::path root = cfg.existing_path("sim_dir");
  const fs::path out = cfg.path("out").value_or(root);
  const double threshold = threshold_from(cfg);
  fs::create_directories(out);

  struct Row {
    std::string scenario, replicate;
    double f1, mse, auc;
    RocCurve roc;
  };
  std::vector<Row> rows;
  for (const fs::path& dir : replicate_dirs(root)) {
    const fs::path fit = dir / "fit";
    const Matrix probs = read_matrix_file(fit / "edge_probs.csv");
    const auto p = static_cast<std::size_t>(probs.rows());
    if (p < 2 || probs.cols() != probs.rows()) throw std::runtime_error("malformed " + (fit / "edge_probs.csv").string());
    const Graph truth = read_truth(dir, p);
    Graph est(p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j)
        if (probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > threshold) est.set_edge(Edge(i, j), true);
    Row r{dir.parent_path().filename().string(), dir.filename().string(), f1_score(est, truth), mse(probs, truth),
          std::nan(""), {}};
    if (truth.edge_count() > 0 && truth.edge_count() < truth.max_edges()) {
      r.roc = roc_points(probs, truth);
      r.auc = auc(r.roc);
    }
    rows.push_back(std::move(r));
  }

  {
    auto f = open_out(out / "metrics.csv");
    f << "scenario,replicate,f1,mse,auc\n";
    for (const auto& r : rows)
      f << r.scenario << ',' << r.replicate << ',' << fmt6(r.f1) << ',' << fmt6(r.mse) << ',' << fmt6(r.auc) << '\n';
  }
  std::map<std::string, std::vector<const Row*>> by_scenario;
  for (const auto& r : rows) by_scenario[r.scenario].push_back(&r);
  auto mean_sd = [](const std::vector<double>& v) -> std::pair<double, double> {
    std::vector<double> ok;
    for (double x : v)
      if (!std::isnan(x)) ok.push_back(x);
    if (ok.empty()) return {std::nan(""), std::nan("")};
    double m = 0.0;
    for (double x : ok) m += x;
    m /= static_cast<double>(ok.size());
    if (ok.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : ok) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(ok.size() - 1))};
  };
  auto f = open_out(out / "metrics_summary.csv");
  f << "scenario,replicates,f1_mean,f1_sd,mse_mean,mse_sd,auc_mean,auc_sd\n";
  for (const auto& [sc, rs] : by_scenario) {
    std::vector<double> f1, ms, au;
    for (const Row* r : rs) {
      f1.push_back(r->f1);
      ms.push_back(r->mse);
      au.push_back(r->auc);
    }
    const auto [f1m, f1s] = mean_sd(f1);
    const auto [msm, mss] = mean_sd(ms);
    const auto [aum, aus] = mean_sd(au);
    f << sc << ',' << rs.size() << ',' << fmt6(f1m) << ',' << fmt6(f1s) << ',' << fmt6(msm) << ',' << fmt6(mss)
      << ',' << fmt6(aum) << ',' << fmt6(aus) << '\n';
    auto roc = open_out(out / ("roc_" + sc + ".csv"));
    roc << "replicate,fpr,tpr\n";
    for (const Row* r : rs)
      for (const auto& pt : r->roc) roc << r->replicate << ',' << fmt6(pt.fpr) << ',' << fmt6(pt.tpr) << '\n';
  }
  log << "evaluated " << rows.size() << " replicate(s) in " << by_scenario.size() << " scenario(s)\n";
}

void cmd_ppc(const KeyValueConfig& cfg, std::ostream& log) {
  const Schema schema = read_schema(cfg.existing_path("schema"));
  const MixedDataset data = ingest_csv(cfg.existing_path("data"), cfg.existing_path("schema"));
  const ChainTrace trace = load_trace(cfg.existing_path("fit_dir") / "trace.json");
  const auto out = cfg.path("out");
  if (!out) throw ConfigError("ppc needs 'out'");
  const std::uint64_t draws = cfg.count("draws", 100);
  if (draws == 0) throw ConfigError("draws must be positive");
  const auto checks = cfg.all("check");
  if (checks.empty()) throw ConfigError("ppc needs at least one 'check = target, given, bins[, target_bins]' line");

  auto column = [&](const std::string& name) {
    for (std::size_t c = 0; c < data.p(); ++c)
      if (data.column_name(c) == name) return c;
    throw ConfigError("unknown column '" + name + "'");
  };

  Rng rng(cfg.count("seed", 1));
  const auto predictive = posterior_predictive_sample(trace, data, draws, rng);

  fs::create_directories(*out);
  auto f = open_out(*out / "ppc.csv");
  f << "check,target,given,bin,level,frequency,source\n";
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const auto parts = split_csv_line(checks[k]);
    if (parts.size() < 3 || parts.size() > 4)
      throw ConfigError("check must read 'target, given, bins[, target_bins]': " + checks[k]);
    const std::size_t target = column(parts[0]);
    const std::size_t given = column(parts[1]);
    const BinSpec given_bins = BinSpec::parse(parts[2]);
    std::optional<BinSpec> target_bins;
    if (parts.size() == 4) target_bins = BinSpec::parse(parts[3]);
    const auto levels = observed_levels(data, target);

    ConditionalTable emp = conditional_histogram(data, target, given, given_bins, target_bins, levels);
    if (!target_bins && !schema[target].levels.empty())
      for (std::size_t l = 0; l < levels.size(); ++l)
        emp.target_labels[l] = schema[target].levels[static_cast<std::size_t>(levels[l])];
    // Predictive counts pooled over draws.
    Matrix pooled = Matrix::Zero(emp.freq.rows(), emp.freq.cols());
    std::vector<std::size_t> pooled_n(emp.counts.size(), 0);
    for (const auto& ds : predictive) {
      const ConditionalTable t = conditional_histogram(ds, target, given, given_bins, target_bins, levels);
      for (Eigen::Index b = 0; b < t.freq.rows(); ++b) {
        if (t.empty(static_cast<std::size_t>(b))) continue;
        pooled.row(b) += t.freq.row(b) * static_cast<double>(t.counts[static_cast<std::size_t>(b)]);
        pooled_n[static_cast<std::size_t>(b)] += t.counts[static_cast<std::size_t>(b)];
      }
    }
    auto emit = [&](const std::string& source, std::size_t b, std::size_t l, std::size_t n, double v) {
      f << k << ',' << parts[0] << ',' << parts[1] << ",\"" << emp.given_labels[b] << "\",\"" << emp.target_labels[l]
        << "\"," << (n == 0 ? std::string("empty") : fmt6(v)) << ',' << source << '\n';
    };
    for (std::size_t b = 0; b < emp.given_labels.size(); ++b)
      for (std::size_t l = 0; l < emp.target_labels.size(); ++l) {
        const auto bi = static_cast<Eigen::Index>(b), li = static_cast<Eigen::Index>(l);
        emit("empirical", b, l, emp.counts[b], emp.freq(bi, li));
        emit("predictive", b, l, pooled_n[b],
             pooled_n[b] ? pooled(bi, li) / static_cast<double>(pooled_n[b]) : 0.0);
      }
  }
  log << "wrote " << (*out / "ppc.csv").string() << '\n';
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Bayesian Gaussian copula graphical models for mixed data"};
  app.require_subcommand(1);
  struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed, iterations, burn_in, jobs;
    std::optional<double> threshold;
  } flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "flat key = value configuration file")->required();
    sub->add_option("--seed", flags.seed, "random seed");
    sub->add_option("--iterations", flags.iterations, "sampler iterations");
    sub->add_option("--burn-in", flags.burn_in, "burn-in iterations");
    sub->add_option("--threshold", flags.threshold, "edge selection threshold");
    sub->add_option("--jobs", flags.jobs, "worker threads");
  };
  std::vector<std::pair<CLI::App*, void (*)(const KeyValueConfig&, std::ostream&)>> subs = {
      {app.add_subcommand("simulate", "generate scenario datasets and truth files"), cmd_simulate},
      {app.add_subcommand("fit", "run the sampler and write edge probabilities"), cmd_fit},
      {app.add_subcommand("eval", "score fits against the truth"), cmd_eval},
      {app.add_subcommand("ppc", "posterior predictive conditional distributions"), cmd_ppc},
  };
  for (auto& [sub, fn] : subs) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    KeyValueConfig cfg = KeyValueConfig::load(flags.config);
    if (flags.seed) cfg.set("seed", std::to_string(*flags.seed));
    if (flags.iterations) cfg.set("iterations", std::to_string(*flags.iterations));
    if (flags.burn_in) cfg.set("burn_in", std::to_string(*flags.burn_in));
    if (flags.jobs) cfg.set("jobs", std::to_string(*flags.jobs));
    if (flags.threshold) {
      std::ostringstream ss;
      ss.precision(17);
      ss << *flags.threshold;
      cfg.set("threshold", ss.str());
    }
    for (auto& [sub, fn] : subs)
      if (sub->parsed()) fn(cfg, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace copulagraph
