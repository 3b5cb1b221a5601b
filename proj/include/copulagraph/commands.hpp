#pragma once

#include <filesystem>
#include <iosfwd>

#include "copulagraph/bdmcmc.hpp"
#include "copulagraph/config.hpp"
#include "copulagraph/copula.hpp"

namespace copulagraph {

/// Scenario datasets plus truth files under out/<scenario>/rep_<k>/.
void cmd_simulate(const KeyValueConfig& cfg, std::ostream& log);
/// One dataset (data, schema, out) or every replicate under sim_dir (written to rep/fit/).
void cmd_fit(const KeyValueConfig& cfg, std::ostream& log);
/// F1, MSE and AUC per replicate under sim_dir, plus per-scenario summaries and ROC points.
void cmd_eval(const KeyValueConfig& cfg, std::ostream& log);
/// Empirical vs posterior predictive conditional frequencies for each `check` line.
void cmd_ppc(const KeyValueConfig& cfg, std::ostream& log);

/// Fits one dataset and writes edge_probs.csv, selected_edges.csv, graph.dot,
/// size_trace.csv, trace.json and run_meta.json into `dir`.
void fit_one(const MixedDataset& data, const ChainConfig& chain, double threshold,
             const KeyValueConfig& echo, const std::filesystem::path& dir);

void save_trace(const std::filesystem::path& path, const ChainTrace& trace);
/// Restores accumulators, graph weights and thinned states; per-iteration traces are not stored.
ChainTrace load_trace(const std::filesystem::path& path);

/// `copulagraph {simulate|fit|eval|ppc} --config <path> [overrides]`; returns the exit status.
int run_cli(int argc, char** argv);

}  // namespace copulagraph
