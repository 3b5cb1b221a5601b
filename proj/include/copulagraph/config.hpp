#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "copulagraph/bdmcmc.hpp"
#include "copulagraph/simgen.hpp"

namespace copulagraph {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` file. `#` starts a comment; `scenario` and `check` may
/// repeat, other keys keep their last value. Relative paths resolve against
/// the file's directory.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(std::istream& is, const std::string& source,
                              const std::filesystem::path& base_dir);
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Command-line override; replaces every earlier value.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::vector<std::string> all(const std::string& key) const;
  std::string require(const std::string& key) const;

  double number(const std::string& key, double fallback) const;
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const;
  std::optional<std::filesystem::path> path(const std::string& key) const;
  /// Like path() but the file or directory must exist.
  std::filesystem::path existing_path(const std::string& key) const;

  /// key -> values in first-seen key order, for echoing into run metadata.
  const std::vector<std::pair<std::string, std::vector<std::string>>>& entries() const { return entries_; }

 private:
  std::vector<std::string>* slot(const std::string& key);

  std::string source_ = "config";
  std::filesystem::path base_dir_;
  std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
  std::map<std::string, std::size_t> values_;
};

ChainConfig chain_config_from(const KeyValueConfig& cfg);
/// Selection threshold in (0,1), default 0.5.
double threshold_from(const KeyValueConfig& cfg);
/// Worker count, default 1.
std::size_t jobs_from(const KeyValueConfig& cfg);

struct ScenarioSpec {
  GraphFamily family = GraphFamily::kRandom;
  std::size_t p = 0;
  std::size_t n = 0;
  std::string id() const;
};

/// `scenario = family p n` lines.
std::vector<ScenarioSpec> scenarios_from(const KeyValueConfig& cfg);
/// `recipe = cycle` (default) or one marginal kind for every column.
MarginalRecipe recipe_from(const KeyValueConfig& cfg, std::size_t p);

}  // namespace copulagraph
