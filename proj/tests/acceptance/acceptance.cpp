// Acceptance gate: one PASS/FAIL line per criterion; exit status is nonzero if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "../support.hpp"
#include "posred/experiment.hpp"

using namespace posred;
using posred::testing::TestRng;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// 1. Riemannian gradient of the augmented Lagrangian vs central differences.
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  TestRng rng(1001);
  double worst = 0.0;
  const Index n = 8, m = 2, p = 2, r = 3;
  for (int inst = 0; inst < 10; ++inst) {
    const StateSpaceSystem full = rng.stable_system(n, m, p);
    StructureMasks masks;
    auto split = [&](Index rows, Index cols, bool diag_free) {
      BlockMask b{Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
          if (!(diag_free && i == j)) (rng.uniform() < 0.4 ? b.zero : b.nonneg)(i, j) = 1.0;
      return b;
    };
    masks.a = split(r, r, true);
    masks.b = split(r, m, false);
    masks.c = split(p, r, false);

    ReducedPoint x = rng.point(r, m, p);
    if (inst % 2 == 0) {  // nearly feasible point on B and C
      x.B = x.B.cwiseAbs().cwiseProduct(masks.b.nonneg);
      x.C = x.C.cwiseAbs().cwiseProduct(masks.c.nonneg);
    }
    const Multipliers mult{
        {rng.uniform_matrix(r, r, 0, 10).cwiseProduct(masks.a.nonneg),
         rng.uniform_matrix(r, m, 0, 10).cwiseProduct(masks.b.nonneg),
         rng.uniform_matrix(p, r, 0, 10).cwiseProduct(masks.c.nonneg)},
        {rng.uniform_matrix(r, r, -1.5, 1.5).cwiseProduct(masks.a.zero),
         rng.uniform_matrix(r, m, -1.5, 1.5).cwiseProduct(masks.b.zero),
         rng.uniform_matrix(p, r, -1.5, 1.5).cwiseProduct(masks.c.zero)}};
    const double rho = 10.0;
    AugmentedLagrangian model(full, masks);
    const TangentVector grad = model.riemannian_gradient(x, mult, rho);
    const double grad_norm = norm(x, grad);
    for (int k = 0; k < 20; ++k) {
      TangentVector xi = rng.tangent(r, m, p);
      xi *= 1.0 / norm(x, xi);
      const double h = 1e-6;
      const double fd = (model.value(retract(x, xi, h), mult, rho).lagrangian -
                         model.value(retract(x, xi, -h), mult, rho).lagrangian) /
                        (2 * h);
      const double an = inner(x, grad, xi);
      // Relative to the gradient norm, which bounds |an| for unit directions.
      worst = std::max(worst, std::abs(fd - an) / std::max(grad_norm, 1e-300));
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-5 && elapsed < 30.0,
          fmt("worst relative error %.2e (limit 1e-5), %.2f s (limit 30 s)", worst, elapsed)};
}

// 2. Stability of (J - R) Q and the init_factorize round trip.
Outcome stability_parametrization() {
  const auto t0 = Clock::now();
  TestRng rng(1002);
  double worst_abscissa = -1e300;
  for (int k = 0; k < 100; ++k) {
    const ReducedPoint x = rng.point(5, 1, 1);
    worst_abscissa = std::max(worst_abscissa, linalg::spectral_abscissa(x.system_matrix()));
  }
  double worst_a = 0.0, worst_r = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Matrix a = rng.stable(5);
    const ReducedPoint x = init_factorize(a, Matrix::Ones(5, 1), Matrix::Ones(1, 5));
    const Matrix qinv = linalg::mat_inv_spd(x.Q);
    worst_a = std::max(worst_a, (x.system_matrix() - a).norm() / a.norm());
    worst_r = std::max(worst_r, (x.R - 0.5 * qinv * qinv).norm() / x.R.norm());
  }
  const double elapsed = seconds_since(t0);
  return {worst_abscissa < 0.0 && worst_a <= 1e-10 && worst_r <= 1e-10 && elapsed < 10.0,
          fmt("max abscissa %.3e, reconstruction %.2e, R identity %.2e (limits 1e-10), %.2f s",
              worst_abscissa, worst_a, worst_r, elapsed)};
}

// 3. ||G - G_r||^2 = 2F + ||G||^2 and agreement of the two trace forms.
Outcome h2_identity() {
  const auto t0 = Clock::now();
  TestRng rng(1003);
  double worst_identity = 0.0, worst_forms = 0.0;
  for (int k = 0; k < 10; ++k) {
    const StateSpaceSystem full = rng.stable_system(10, 2, 2);
    const StateSpaceSystem red = rng.stable_system(4, 2, 2);
    const CostTerms t = cost_terms(full, red, solve_coupling(full, red));
    const double g2 = std::pow(h2_norm(full), 2);
    const double e2 = std::pow(h2_norm(error_system(full, red)), 2);
    worst_identity = std::max(worst_identity, std::abs(2 * t.value + g2 - e2) / g2);
    worst_forms = std::max(worst_forms, std::abs(t.value - t.alternative) / t.scale);
  }
  const double elapsed = seconds_since(t0);
  return {worst_identity <= 1e-7 && worst_forms <= 1e-8 && elapsed < 10.0,
          fmt("identity %.2e (limit 1e-7), trace forms %.2e (limit 1e-8), %.2f s", worst_identity,
              worst_forms, elapsed)};
}

struct ExperimentRun {
  std::uint64_t seed = 0;
  ReductionOutcome outcome;
  double seconds = 0.0;
};

// 5. Experiment reproduction over ten seeds.
Outcome experiment(const std::vector<ExperimentRun>& runs) {
  int h2_better = 0, hinf_better = 0;
  std::vector<double> c2, r2;
  double slowest = 0.0;
  for (const ExperimentRun& run : runs) {
    const ErrorMetrics& c = run.outcome.clustering_metrics;
    const ErrorMetrics& r = run.outcome.ralm_metrics;
    h2_better += r.h2_rel < c.h2_rel;
    hinf_better += r.hinf_rel < c.hinf_rel;
    c2.push_back(c.h2_rel);
    r2.push_back(r.h2_rel);
    slowest = std::max(slowest, run.seconds);
    std::printf("    seed %2llu: Err2 %.4f -> %.4f, Errinf %.4f -> %.4f, %s after %d outer, %.1f s\n",
                static_cast<unsigned long long>(run.seed), c.h2_rel, r.h2_rel, c.hinf_rel,
                r.hinf_rel, run.outcome.ralm.report.termination.c_str(),
                run.outcome.ralm.report.outer_iterations, run.seconds);
  }
  const double mc = median(c2), mr = median(r2);
  const bool pass = h2_better >= 9 && mr <= 0.20 && mc >= 0.40 && hinf_better >= 8 && slowest <= 600.0;
  return {pass, fmt("Err2 better on %d/10 (need 9), median Err2 clustering %.4f (need >= 0.40) "
                    "RALM %.4f (need <= 0.20), Errinf better on %d/10 (need 8), slowest %.1f s",
                    h2_better, mc, mr, hinf_better, slowest)};
}

// 6. Exact structure, stability and output positivity of the final models.
Outcome structural_feasibility(const std::vector<ExperimentRun>& runs) {
  int ok = 0;
  double min_output = 1e300;
  std::vector<double> t;
  for (int k = 0; k <= 30000; ++k) t.push_back(k * 1e-3);
  for (const ExperimentRun& run : runs) {
    const StateSpaceSystem& red = run.outcome.ralm.reduced;
    const StructureMasks& m = run.outcome.masks;
    const bool zeros = red.A().cwiseProduct(m.a.zero).norm() == 0.0 &&
                       red.B().cwiseProduct(m.b.zero).norm() == 0.0 &&
                       red.C().cwiseProduct(m.c.zero).norm() == 0.0;
    auto nonneg_on = [](const Matrix& v, const Matrix& mask) {
      for (Index i = 0; i < v.size(); ++i)
        if (mask.data()[i] != 0.0 && v.data()[i] < 0.0) return false;
      return true;
    };
    const bool nn = nonneg_on(red.A(), m.a.nonneg) && nonneg_on(red.B(), m.b.nonneg) &&
                    nonneg_on(red.C(), m.c.nonneg);
    const bool metzler = is_metzler(red.A(), 0.0);
    const bool stable = linalg::spectral_abscissa(red.A()) < 0.0;
    const Matrix y = simulate(red, test_input(red.inputs()), Vector::Zero(red.states()), t);
    min_output = std::min(min_output, y.minCoeff());
    ok += zeros && nn && metzler && stable && y.minCoeff() >= -1e-9;
  }
  return {ok == static_cast<int>(runs.size()),
          fmt("%d/%zu models feasible, min simulated output %.3e (limit -1e-9)", ok, runs.size(),
              min_output)};
}

// 7. Norm engines against analytic values and independent oracles.
Outcome norm_engines() {
  const StateSpaceSystem scalar(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0),
                                Matrix::Constant(1, 1, 1.0));
  const double e_h2 = std::abs(h2_norm(scalar) - 1.0 / std::sqrt(2.0));
  const double e_hinf = std::abs(hinf_norm(scalar) - 1.0);
  TestRng rng(1007);
  double worst_h2 = 0.0, worst_hinf = 0.0;
  for (int k = 0; k < 10; ++k) {
    const StateSpaceSystem sys = rng.stable_system(6, 2, 2);
    worst_h2 = std::max(worst_h2, posred::testing::rel_diff(
                                      h2_norm(sys),
                                      std::sqrt(posred::testing::h2_squared_by_quadrature(sys))));
    worst_hinf = std::max(worst_hinf, posred::testing::rel_diff(
                                          hinf_norm(sys), posred::testing::hinf_by_grid(sys, 100000)));
  }
  return {e_h2 <= 1e-9 && e_hinf <= 1e-9 && worst_h2 <= 1e-4 && worst_hinf <= 1e-4,
          fmt("scalar H2 %.1e, Hinf %.1e (limit 1e-9); quadrature %.2e, grid %.2e (limit 1e-4)",
              e_h2, e_hinf, worst_h2, worst_hinf)};
}

// 8. Repeated seeded runs give byte-identical metrics.
Outcome determinism() {
  ExperimentConfig c;
  c.generator.seed = 7;
  c.ralm.max_outer = 60;
  const std::string a = outcome_metrics_json(run_reduction(c), c).dump(2);
  const std::string b = outcome_metrics_json(run_reduction(c), c).dump(2);
  const std::string g1 = io::network_to_json(generate_network(c.generator, c.inputs, c.outputs)).dump();
  const std::string g2 = io::network_to_json(generate_network(c.generator, c.inputs, c.outputs)).dump();
  return {a == b && g1 == g2, a == b && g1 == g2 ? "metrics and graph bytes identical"
                                                 : "repeated runs differ"};
}

}  // namespace

int main() {
  linalg::reset_solve_statistics();
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report(1, "gradient correctness", gradient_correctness());
  report(2, "stability parametrization", stability_parametrization());
  report(3, "H2 identity", h2_identity());
  report(7, "norm engines", norm_engines());

  std::vector<ExperimentRun> runs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig c;
    c.generator.seed = seed;
    const auto t0 = Clock::now();
    runs.push_back({seed, run_reduction(c), 0.0});
    runs.back().seconds = seconds_since(t0);
  }
  report(5, "experiment reproduction", experiment(runs));
  report(6, "structural feasibility", structural_feasibility(runs));
  report(8, "determinism", determinism());

  const linalg::SolveStatistics stats = linalg::solve_statistics();
  report(4, "solver residuals",
         {stats.failures == 0 && stats.max_relative_residual <= 1e-8,
          fmt("%llu solves, %llu failures, max relative residual %.2e (limit 1e-8)",
              static_cast<unsigned long long>(stats.solves),
              static_cast<unsigned long long>(stats.failures), stats.max_relative_residual)});

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
