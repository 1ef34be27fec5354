#pragma once

// End-to-end reduction pipeline behind the command-line tool: network
// generation, clustering baseline, RALM refinement, metrics, artifacts and
// plots.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posred/io.hpp"
#include "posred/ralm.hpp"

namespace posred {

// Connected random digraph: a random spanning arborescence plus independent
// extra edges with probability `density`, optional self-loops, weights U[0, 1].
// Density 0 yields the edgeless network.
struct GeneratorSpec {
  int n = 20;
  double density = 0.1;
  double self_loop_prob = 0.1;
  std::uint64_t seed = 1;
};

io::NetworkFile generate_network(const GeneratorSpec& spec, std::vector<int> inputs,
                                 std::vector<int> outputs);

struct ExperimentConfig {
  std::optional<std::filesystem::path> graph_path;  // otherwise generated
  GeneratorSpec generator;
  double shift = 0.1;
  std::vector<int> inputs{1, 14};
  std::vector<int> outputs{1, 7, 18};
  std::optional<Clustering> clusters;  // otherwise baseline_clustering(r)
  int r = 6;
  std::optional<double> alpha;  // otherwise choose_alpha
  RalmConfig ralm;
  std::filesystem::path out_dir = "out";

  // Unknown keys are rejected. Relative graph paths resolve against `base`.
  static ExperimentConfig from_json(const io::json& j, const std::filesystem::path& base = {});
  void validate() const;
};

struct ReductionOutcome {
  io::NetworkFile network;
  StateSpaceSystem original;
  Clustering clustering;
  ReducedInit init;
  StructureMasks masks;
  RalmResult ralm;
  ErrorMetrics clustering_metrics;
  ErrorMetrics ralm_metrics;
};

ReductionOutcome run_reduction(const ExperimentConfig& config);

// Rounds to `digits` significant decimal digits.
double round_significant(double v, int digits = 6);

// {err2_rel, errinf_rel, h2_abs, hinf_abs}, 6 significant digits.
io::json metrics_to_json(const ErrorMetrics& m);

io::json outcome_metrics_json(const ReductionOutcome& outcome, const ExperimentConfig& config);

// Writes original.json, graph.json, clustering.json, ralm.json, masks.json,
// trace.csv and metrics.json into `dir`.
void write_artifact(const ReductionOutcome& outcome, const ExperimentConfig& config,
                    const std::filesystem::path& dir);

// Metrics of a persisted (original, reduced) pair.
ErrorMetrics evaluate_pair(const std::filesystem::path& original,
                           const std::filesystem::path& reduced);

// Input used for time responses: u_k(t) = exp(-0.1 t) |cos(100 pi t)| for even
// k and exp(-0.1 t) |sin(100 (k + 1) pi t)| for odd k (k zero-based).
InputSignal test_input(Index inputs);

struct PlotOptions {
  double horizon = 30.0;
  double dt = 1e-3;
  int frequency_points = 200;
  bool zero_input = false;
};

struct PlotSummary {
  double max_gap_clustering = 0.0;  // max_t,k |y_k - y_clustering,k|
  double max_gap_ralm = 0.0;
  double min_output = 0.0;  // over all three systems
};

// Reads original.json, clustering.json and ralm.json from `dir`; writes
// response_y<k>.svg (one per output), frequency.svg and plot_summary.json there.
PlotSummary render_plots(const std::filesystem::path& dir, const PlotOptions& options = {});

struct SweepEntry {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  ErrorMetrics clustering;
  ErrorMetrics ralm;
};

// One reduction per seed (generator seed), `jobs` at a time, each writing to
// out_dir/seed_<seed>. Writes out_dir/summary.json.
std::vector<SweepEntry> run_sweep(const ExperimentConfig& config,
                                  const std::vector<std::uint64_t>& seeds, int jobs);

}  // namespace posred
