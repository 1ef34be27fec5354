// posred: reduce positive network systems by clustering plus RALM refinement.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 anything else.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "posred/errors.hpp"
#include "posred/experiment.hpp"

namespace fs = std::filesystem;
using namespace posred;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> r;
  std::optional<double> alpha;
  std::optional<int> max_outer;
  std::optional<std::string> out;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "JSON experiment config");
    cmd->add_option("--seed", seed, "generator seed");
    cmd->add_option("--r", r, "number of clusters for the baseline clustering");
    cmd->add_option("--alpha", alpha, "diagonal shift of the clustered model");
    cmd->add_option("--max-outer", max_outer, "RALM outer iteration limit");
    cmd->add_option("--out", out, "output directory");
  }

  ExperimentConfig load() const {
    ExperimentConfig c;
    if (!config_path.empty()) {
      const fs::path p = config_path;
      c = ExperimentConfig::from_json(io::read_json(p), p.parent_path());
    }
    if (seed) c.generator.seed = *seed;
    if (r) c.r = *r;
    if (alpha) c.alpha = *alpha;
    if (max_outer) c.ralm.max_outer = *max_outer;
    if (out) c.out_dir = *out;
    c.validate();
    return c;
  }
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(item));
      } else {
        const std::uint64_t lo = std::stoull(item.substr(0, dash));
        const std::uint64_t hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw ValidationError("--seeds: empty range " + item);
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw ValidationError("--seeds: cannot parse '" + item + "'");
    }
    pos = comma + 1;
  }
  return seeds;
}

void print_json(const io::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving reduction of positive network systems"};
  app.require_subcommand(1);

  Overrides gen_opts;
  auto* gen = app.add_subcommand("generate", "write a seeded random network to <out>/graph.json");
  gen_opts.attach(gen);

  Overrides red_opts;
  auto* red = app.add_subcommand("reduce", "cluster, refine with RALM and write the artifact");
  red_opts.attach(red);

  std::string eval_original, eval_reduced, eval_out;
  auto* eval = app.add_subcommand("evaluate", "relative H2 and Hinf errors of a reduced model");
  eval->add_option("original", eval_original, "original system JSON")->required();
  eval->add_option("reduced", eval_reduced, "reduced system JSON")->required();
  eval->add_option("--out", eval_out, "also write the metrics to this file");

  std::string plot_dir;
  PlotOptions plot_opts;
  auto* plot = app.add_subcommand("plot", "time and frequency response SVGs for an artifact");
  plot->add_option("dir", plot_dir, "artifact directory written by reduce")->required();
  plot->add_option("--horizon", plot_opts.horizon, "simulation horizon");
  plot->add_option("--dt", plot_opts.dt, "output grid step");
  plot->add_flag("--zero-input", plot_opts.zero_input, "simulate with u = 0");

  Overrides sweep_opts;
  std::string seeds_text = "1-10";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "independent reductions over several seeds");
  sweep_opts.attach(sweep);
  sweep->add_option("--seeds", seeds_text, "seed list, e.g. 1-10 or 3,5,8");
  sweep->add_option("--jobs", jobs, "concurrent workers")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const ExperimentConfig c = gen_opts.load();
      const io::NetworkFile net = generate_network(c.generator, c.inputs, c.outputs);
      fs::create_directories(c.out_dir);
      io::write_json(c.out_dir / "graph.json", io::network_to_json(net));
      std::cout << (c.out_dir / "graph.json").string() << '\n';
    } else if (*red) {
      const ExperimentConfig c = red_opts.load();
      const ReductionOutcome o = run_reduction(c);
      write_artifact(o, c, c.out_dir);
      print_json(outcome_metrics_json(o, c));
    } else if (*eval) {
      const io::json j = metrics_to_json(evaluate_pair(eval_original, eval_reduced));
      if (!eval_out.empty()) io::write_json(eval_out, j);
      print_json(j);
    } else if (*plot) {
      if (!(plot_opts.horizon > 0.0) || !(plot_opts.dt > 0.0)) {
        throw ValidationError("plot: horizon and dt must be positive");
      }
      const PlotSummary s = render_plots(plot_dir, plot_opts);
      print_json(io::json{{"max_gap_clustering", s.max_gap_clustering},
                          {"max_gap_ralm", s.max_gap_ralm},
                          {"min_output", s.min_output}});
    } else if (*sweep) {
      const ExperimentConfig c = sweep_opts.load();
      const auto entries = run_sweep(c, parse_seeds(seeds_text), jobs);
      int failed = 0;
      for (const SweepEntry& e : entries) {
        if (e.ok) {
          std::printf("seed %llu: clustering err2 %.6g, ralm err2 %.6g\n",
                      static_cast<unsigned long long>(e.seed), e.clustering.h2_rel, e.ralm.h2_rel);
        } else {
          ++failed;
          std::printf("seed %llu: failed: %s\n", static_cast<unsigned long long>(e.seed),
                      e.error.c_str());
        }
      }
      std::cout << (c.out_dir / "summary.json").string() << '\n';
      if (failed) return 1;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const io::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
