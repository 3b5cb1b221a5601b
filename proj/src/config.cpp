#include "copulagraph/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace copulagraph {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "seed",      "iterations", "burn_in",       "b_prior",     "prior_edge_logit", "log_rate_cap",
      "rate_form", "clock",      "latent",        "thin",        "threshold",        "jobs",
      "prior_scale", "data",     "schema",        "out",         "sim_dir",          "fit_dir",
      "replicates", "scenario",  "recipe",        "ordinal_levels", "count_rate",    "binary_split",
      "missing_fraction", "draws", "check"};
  return keys;
}

bool repeatable(const std::string& key) { return key == "scenario" || key == "check"; }

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<std::string>* KeyValueConfig::slot(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    values_[key] = entries_.size();
    entries_.push_back({key, {}});
    return &entries_.back().second;
  }
  return &entries_[it->second].second;
}

KeyValueConfig KeyValueConfig::parse(std::istream& is, const std::string& source,
                                     const std::filesystem::path& base_dir) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  cfg.base_dir_ = base_dir;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!known_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    auto* v = cfg.slot(key);
    if (!repeatable(key)) v->clear();
    v->push_back(value);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string(), path.parent_path());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'");
  auto* v = slot(key);
  v->assign(1, value);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || entries_[it->second].second.empty()) return std::nullopt;
  return entries_[it->second].second.back();
}

std::vector<std::string> KeyValueConfig::all(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return {};
  return entries_[it->second].second;
}

std::string KeyValueConfig::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ConfigError(source_ + ": missing required key '" + key + "'");
  return *v;
}

double KeyValueConfig::number(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size() || !std::isfinite(out))
    throw ConfigError(source_ + ": '" + key + "' is not a number: " + *v);
  return out;
}

std::uint64_t KeyValueConfig::count(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError(source_ + ": '" + key + "' is not a nonnegative integer: " + *v);
  return out;
}

std::optional<std::filesystem::path> KeyValueConfig::path(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  std::filesystem::path p(*v);
  if (p.is_relative()) p = base_dir_ / p;
  return p.lexically_normal();
}

std::filesystem::path KeyValueConfig::existing_path(const std::string& key) const {
  const auto p = path(key);
  if (!p) throw ConfigError(source_ + ": missing required key '" + key + "'");
  if (!std::filesystem::exists(*p)) throw ConfigError(key + " path does not exist: " + p->string());
  return *p;
}

ChainConfig chain_config_from(const KeyValueConfig& kv) {
  ChainConfig c;
  c.iterations = kv.count("iterations", c.iterations);
  c.burn_in = kv.count("burn_in", c.burn_in);
  c.b_prior = kv.number("b_prior", c.b_prior);
  c.prior_edge_logit = kv.number("prior_edge_logit", c.prior_edge_logit);
  c.seed = kv.count("seed", c.seed);
  c.rate_cap = std::exp(kv.number("log_rate_cap", 20.0));
  c.thin = kv.count("thin", c.thin);
  if (const auto v = kv.get("prior_scale"); v && *v != "identity")
    throw ConfigError("prior_scale must be 'identity': the exact rate ratio holds only for D = I");
  if (const auto v = kv.get("rate_form")) {
    if (*v == "balanced") c.rate_form = RateForm::kBalanced;
    else if (*v == "literal") c.rate_form = RateForm::kLiteral;
    else throw ConfigError("rate_form must be balanced or literal");
  }
  if (const auto v = kv.get("clock")) {
    if (*v == "uniformized") c.clock = JumpClock::kUniformized;
    else if (*v == "embedded") c.clock = JumpClock::kEmbedded;
    else throw ConfigError("clock must be uniformized or embedded");
  }
  if (const auto v = kv.get("latent")) {
    if (*v == "copula") c.latent_mode = LatentMode::kCopula;
    else if (*v == "gaussian") c.latent_mode = LatentMode::kGaussian;
    else throw ConfigError("latent must be copula or gaussian");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

double threshold_from(const KeyValueConfig& kv) {
  const double t = kv.number("threshold", 0.5);
  if (!(t > 0.0 && t < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  return t;
}

std::size_t jobs_from(const KeyValueConfig& kv) {
  const auto j = kv.count("jobs", 1);
  if (j == 0) throw ConfigError("jobs must be positive");
  return j;
}

std::string ScenarioSpec::id() const {
  return std::string(to_string(family)) + "_p" + std::to_string(p) + "_n" + std::to_string(n);
}

std::vector<ScenarioSpec> scenarios_from(const KeyValueConfig& kv) {
  std::vector<ScenarioSpec> out;
  for (const auto& line : kv.all("scenario")) {
    std::istringstream ss(line);
    std::string fam, extra;
    ScenarioSpec s;
    if (!(ss >> fam >> s.p >> s.n) || (ss >> extra))
      throw ConfigError("scenario must read 'family p n': " + line);
    try {
      s.family = parse_graph_family(fam);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (s.p < 2 || s.n < 2) throw ConfigError("scenario needs p >= 2 and n >= 2: " + line);
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("no scenario lines");
  return out;
}

MarginalRecipe recipe_from(const KeyValueConfig& kv, std::size_t p) {
  const std::string r = kv.get("recipe").value_or("cycle");
  MarginalRecipe recipe;
  try {
    recipe = r == "cycle" ? MarginalRecipe::cycle(p) : MarginalRecipe::uniform(p, parse_marginal_kind(r));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  recipe.ordinal_levels = kv.count("ordinal_levels", recipe.ordinal_levels);
  recipe.count_rate = kv.number("count_rate", recipe.count_rate);
  recipe.binary_split = kv.number("binary_split", recipe.binary_split);
  try {
    recipe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return recipe;
}

}  // namespace copulagraph
