#include "posred/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>
#include <thread>
#include <utility>

#include "posred/svg_plot.hpp"

namespace posred {

namespace {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// the conversions are done by hand to keep generated files bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t k) { return static_cast<std::size_t>(engine_() % k); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

io::NetworkFile generate_network(const GeneratorSpec& spec, std::vector<int> inputs,
                                 std::vector<int> outputs) {
  if (spec.n < 2) throw ValidationError("generator: n must be at least 2");
  if (!(spec.density >= 0.0 && spec.density <= 1.0)) {
    throw ValidationError("generator: density must lie in [0, 1]");
  }
  if (!(spec.self_loop_prob >= 0.0 && spec.self_loop_prob <= 1.0)) {
    throw ValidationError("generator: self_loop_prob must lie in [0, 1]");
  }
  Rng rng(spec.seed);
  const int n = spec.n;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  io::NetworkFile net;
  net.graph.node_count = n;
  net.inputs = std::move(inputs);
  net.outputs = std::move(outputs);
  net.seed = spec.seed;
  // Density 0 means an uncoupled network: no spanning tree and no self-loops.
  if (spec.density == 0.0) return net;
  std::set<std::pair<int, int>> present;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const int parent = order[rng.below(i)];
    net.graph.edges.push_back({parent, order[i], rng.uniform01()});
    present.insert({parent, order[i]});
  }
  for (int u = 1; u <= n; ++u) {
    for (int v = 1; v <= n; ++v) {
      if (u == v || present.count({u, v})) continue;
      if (rng.uniform01() < spec.density) net.graph.edges.push_back({u, v, rng.uniform01()});
    }
  }
  for (int v = 1; v <= n; ++v) {
    if (rng.uniform01() < spec.self_loop_prob) net.graph.edges.push_back({v, v, rng.uniform01()});
  }
  return net;
}

namespace {

void reject_unknown(const io::json& j, std::initializer_list<const char*> keys, const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) {
      throw ValidationError(std::string(what) + ": unknown key '" + it.key() + "'");
    }
  }
}

template <class T>
void read_if(const io::json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) {
    try {
      out = j[key].get<T>();
    } catch (const io::json::exception& e) {
      throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
    }
  }
}

RalmConfig ralm_from_json(const io::json& j, RalmConfig c) {
  reject_unknown(j,
                 {"sigma0", "rho0", "lambda0", "lambda_min", "lambda_max", "gamma0", "gamma_min",
                  "gamma_max", "eps0", "eps_min", "theta_rho", "theta_eps", "theta_sigma",
                  "d_min", "max_outer", "subsolver_iters", "early_stop_streak",
                  "early_stop_violation", "line_search"},
                 "config.ralm");
  read_if(j, "sigma0", c.sigma0);
  read_if(j, "rho0", c.rho0);
  read_if(j, "lambda0", c.lambda0);
  read_if(j, "lambda_min", c.lambda_min);
  read_if(j, "lambda_max", c.lambda_max);
  read_if(j, "gamma0", c.gamma0);
  read_if(j, "gamma_min", c.gamma_min);
  read_if(j, "gamma_max", c.gamma_max);
  read_if(j, "eps0", c.eps0);
  read_if(j, "eps_min", c.eps_min);
  read_if(j, "theta_rho", c.theta_rho);
  read_if(j, "theta_eps", c.theta_eps);
  read_if(j, "theta_sigma", c.theta_sigma);
  read_if(j, "d_min", c.d_min);
  read_if(j, "max_outer", c.max_outer);
  read_if(j, "subsolver_iters", c.subsolver_iters);
  read_if(j, "early_stop_streak", c.early_stop_streak);
  read_if(j, "early_stop_violation", c.early_stop_violation);
  if (j.contains("line_search")) {
    const io::json& ls = j["line_search"];
    reject_unknown(ls, {"sufficient_decrease", "backtrack", "max_halvings", "initial_step"},
                   "config.ralm.line_search");
    read_if(ls, "sufficient_decrease", c.line_search.sufficient_decrease);
    read_if(ls, "backtrack", c.line_search.backtrack);
    read_if(ls, "max_halvings", c.line_search.max_halvings);
    read_if(ls, "initial_step", c.line_search.initial_step);
  }
  return c;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const io::json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  reject_unknown(j,
                 {"graph", "generator", "shift", "inputs", "outputs", "clusters", "r", "alpha",
                  "ralm", "out"},
                 "config");
  ExperimentConfig c;
  if (j.contains("graph") && !j["graph"].is_null()) {
    std::filesystem::path p = j["graph"].get<std::string>();
    c.graph_path = p.is_relative() && !base.empty() ? base / p : p;
  }
  if (j.contains("generator")) {
    const io::json& g = j["generator"];
    reject_unknown(g, {"n", "density", "self_loop_prob", "seed"}, "config.generator");
    read_if(g, "n", c.generator.n);
    read_if(g, "density", c.generator.density);
    read_if(g, "self_loop_prob", c.generator.self_loop_prob);
    read_if(g, "seed", c.generator.seed);
  }
  read_if(j, "shift", c.shift);
  read_if(j, "inputs", c.inputs);
  read_if(j, "outputs", c.outputs);
  if (j.contains("clusters") && !j["clusters"].is_null()) {
    c.clusters = io::clustering_from_json(j["clusters"]);
  }
  read_if(j, "r", c.r);
  if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha = j["alpha"].get<double>();
  if (j.contains("ralm")) c.ralm = ralm_from_json(j["ralm"], c.ralm);
  if (j.contains("out") && !j["out"].is_null()) c.out_dir = j["out"].get<std::string>();
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (!graph_path && !(shift > 0.0)) {
    throw ValidationError("config: shift must be positive for generated networks");
  }
  if (!clusters && r < 1) throw ValidationError("config: r must be positive");
  if (alpha && !(*alpha >= 0.0)) throw ValidationError("config: alpha must be nonnegative");
  ralm.validate();
}

ReductionOutcome run_reduction(const ExperimentConfig& config) {
  config.validate();
  ReductionOutcome out;
  if (config.graph_path) {
    out.network = io::network_from_json(io::read_json(*config.graph_path));
    if (out.network.inputs.empty()) out.network.inputs = config.inputs;
    if (out.network.outputs.empty()) out.network.outputs = config.outputs;
  } else {
    out.network = generate_network(config.generator, config.inputs, config.outputs);
  }
  out.original = loopy_laplacian_system(out.network.graph, out.network.inputs,
                                        out.network.outputs, config.shift);
  if (!is_stable(out.original)) {
    throw UnstableSystemError("reduce: original system is not stable",
                              linalg::spectral_abscissa(out.original.A()));
  }

  const int n = out.network.graph.node_count;
  if (config.clusters) {
    out.clustering = *config.clusters;
  } else if (out.network.clusters) {
    out.clustering = *out.network.clusters;
  } else {
    if (config.r >= n) {
      throw ValidationError("reduce: r must be smaller than the number of nodes");
    }
    out.clustering = baseline_clustering(out.network.graph, config.r);
  }
  const Matrix pi = characteristic_matrix(out.clustering, n);
  const double alpha =
      config.alpha ? *config.alpha : choose_alpha(aggregate_dynamics(out.original.A(), pi));
  out.init = cluster_reduce(out.original, pi, alpha);
  out.masks = structure_masks(out.init);
  out.ralm = optimize(out.original, out.init, out.masks, config.ralm);
  out.clustering_metrics = error_metrics(out.original, out.init.system());
  out.ralm_metrics = error_metrics(out.original, out.ralm.reduced);
  return out;
}

double round_significant(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

io::json metrics_to_json(const ErrorMetrics& m) {
  return io::json{{"err2_rel", round_significant(m.h2_rel)},
                  {"errinf_rel", round_significant(m.hinf_rel)},
                  {"h2_abs", round_significant(m.h2_abs)},
                  {"hinf_abs", round_significant(m.hinf_abs)}};
}

io::json outcome_metrics_json(const ReductionOutcome& o, const ExperimentConfig& config) {
  (void)config;
  io::json j;
  if (o.network.seed) j["seed"] = *o.network.seed;
  j["n"] = o.original.states();
  j["r"] = o.clustering.size();
  j["alpha"] = round_significant(o.init.alpha);
  j["clustering"] = metrics_to_json(o.clustering_metrics);
  j["ralm"] = metrics_to_json(o.ralm_metrics);
  const RalmReport& rep = o.ralm.report;
  j["ralm_report"] = io::json{
      {"termination", rep.termination},
      {"outer_iterations", rep.outer_iterations},
      {"stalls", rep.stalls},
      {"projected", rep.projected},
      {"violation_before_projection", round_significant(rep.violation_before_projection)},
      {"warnings", rep.warnings}};
  return j;
}

void write_artifact(const ReductionOutcome& o, const ExperimentConfig& config,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::NetworkFile net = o.network;
  net.clusters = o.clustering;
  io::write_json(dir / "graph.json", io::network_to_json(net));
  io::write_json(dir / "original.json", io::system_to_json(o.original));
  io::write_json(dir / "clustering.json", io::system_to_json(o.init.system()));
  io::write_json(dir / "ralm.json", io::system_to_json(o.ralm.reduced));
  io::write_json(dir / "masks.json", io::masks_to_json(o.masks));
  io::write_text(dir / "trace.csv", io::trace_csv(o.ralm.report.trace));
  io::write_json(dir / "metrics.json", outcome_metrics_json(o, config));
}

ErrorMetrics evaluate_pair(const std::filesystem::path& original,
                           const std::filesystem::path& reduced) {
  const StateSpaceSystem full = io::system_from_json(io::read_json(original));
  const StateSpaceSystem red = io::system_from_json(io::read_json(reduced));
  if (!is_stable(red)) {
    throw UnstableSystemError(
        "evaluate: reduced system is not stable; H2 and Hinf errors are undefined",
        linalg::spectral_abscissa(red.A()));
  }
  if (!is_stable(full)) {
    throw UnstableSystemError("evaluate: original system is not stable",
                              linalg::spectral_abscissa(full.A()));
  }
  return error_metrics(full, red);
}

InputSignal test_input(Index inputs) {
  return [inputs](double t, Eigen::Ref<Vector> u) {
    const double decay = std::exp(-0.1 * t);
    for (Index k = 0; k < inputs; ++k) {
      const double w = 100.0 * std::numbers::pi * static_cast<double>(k + 1);
      u(k) = decay * std::abs(k % 2 == 0 ? std::cos(w * t) : std::sin(w * t));
    }
  };
}

PlotSummary render_plots(const std::filesystem::path& dir, const PlotOptions& options) {
  for (const char* f : {"original.json", "clustering.json", "ralm.json"}) {
    if (!std::filesystem::exists(dir / f)) {
      throw ValidationError("plot: missing artifact file " + (dir / f).string());
    }
  }
  const StateSpaceSystem original = io::system_from_json(io::read_json(dir / "original.json"));
  const StateSpaceSystem clustering = io::system_from_json(io::read_json(dir / "clustering.json"));
  const StateSpaceSystem ralm = io::system_from_json(io::read_json(dir / "ralm.json"));

  const auto steps = static_cast<std::size_t>(std::llround(options.horizon / options.dt));
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * options.dt;

  const InputSignal u = options.zero_input
                            ? InputSignal([](double, Eigen::Ref<Vector> v) { v.setZero(); })
                            : test_input(original.inputs());
  const Matrix y = simulate(original, u, Vector::Zero(original.states()), t);
  const Matrix yc = simulate(clustering, u, Vector::Zero(clustering.states()), t);
  const Matrix yr = simulate(ralm, u, Vector::Zero(ralm.states()), t);

  PlotSummary summary;
  summary.max_gap_clustering = (y - yc).cwiseAbs().maxCoeff();
  summary.max_gap_ralm = (y - yr).cwiseAbs().maxCoeff();
  summary.min_output = std::min({y.minCoeff(), yc.minCoeff(), yr.minCoeff()});

  const std::size_t stride = std::max<std::size_t>(1, t.size() / 1500);
  for (Index k = 0; k < y.rows(); ++k) {
    auto series = [&](const Matrix& m, const char* label, const char* color) {
      svg::Series s{label, color, {}, {}};
      for (std::size_t i = 0; i < t.size(); i += stride) {
        s.x.push_back(t[i]);
        s.y.push_back(m(k, static_cast<Index>(i)));
      }
      return s;
    };
    svg::ChartOptions o;
    o.title = "Output y" + std::to_string(k + 1) + "(t)";
    o.x_label = "t";
    o.y_label = "y" + std::to_string(k + 1);
    io::write_text(dir / ("response_y" + std::to_string(k + 1) + ".svg"),
                   svg::line_chart({series(y, "original", "#1f77b4"),
                                    series(yc, "clustering", "#ff7f0e"),
                                    series(yr, "RALM", "#2ca02c")},
                                   o));
  }

  std::vector<svg::Series> freq{{"original", "#1f77b4", {}, {}},
                                {"clustering", "#ff7f0e", {}, {}},
                                {"RALM", "#2ca02c", {}, {}}};
  const int points = std::max(2, options.frequency_points);
  for (int i = 0; i < points; ++i) {
    const double w = std::pow(10.0, -3.0 + 6.0 * i / (points - 1));
    const StateSpaceSystem* systems[] = {&original, &clustering, &ralm};
    for (int s = 0; s < 3; ++s) {
      freq[static_cast<std::size_t>(s)].x.push_back(w);
      freq[static_cast<std::size_t>(s)].y.push_back(sigma_max(*systems[s], w));
    }
  }
  svg::ChartOptions fo;
  fo.title = "Largest singular value of the transfer function";
  fo.x_label = "omega";
  fo.y_label = "sigma_max";
  fo.log_x = true;
  fo.log_y = true;
  io::write_text(dir / "frequency.svg", svg::line_chart(freq, fo));

  io::write_json(dir / "plot_summary.json",
                 io::json{{"max_gap_clustering", round_significant(summary.max_gap_clustering)},
                          {"max_gap_ralm", round_significant(summary.max_gap_ralm)},
                          {"min_output", round_significant(summary.min_output)}});
  return summary;
}

std::vector<SweepEntry> run_sweep(const ExperimentConfig& config,
                                  const std::vector<std::uint64_t>& seeds, int jobs) {
  if (config.graph_path) throw ValidationError("sweep: requires a generated network");
  std::vector<SweepEntry> entries(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      SweepEntry& e = entries[i];
      e.seed = seeds[i];
      ExperimentConfig c = config;
      c.generator.seed = seeds[i];
      c.out_dir = config.out_dir / ("seed_" + std::to_string(seeds[i]));
      try {
        const ReductionOutcome o = run_reduction(c);
        write_artifact(o, c, c.out_dir);
        e.clustering = o.clustering_metrics;
        e.ralm = o.ralm_metrics;
        e.ok = true;
      } catch (const std::exception& ex) {
        e.error = ex.what();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, seeds.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  io::json runs = io::json::array();
  std::vector<double> c2, r2;
  for (const SweepEntry& e : entries) {
    io::json row{{"seed", e.seed}, {"ok", e.ok}};
    if (e.ok) {
      row["clustering"] = metrics_to_json(e.clustering);
      row["ralm"] = metrics_to_json(e.ralm);
      c2.push_back(e.clustering.h2_rel);
      r2.push_back(e.ralm.h2_rel);
    } else {
      row["error"] = e.error;
    }
    runs.push_back(std::move(row));
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  io::write_json(config.out_dir / "summary.json",
                 io::json{{"runs", runs},
                          {"median_err2_clustering", round_significant(median(c2))},
                          {"median_err2_ralm", round_significant(median(r2))}});
  return entries;
}

}  // namespace posred
