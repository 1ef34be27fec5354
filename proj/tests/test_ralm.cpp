#include <cmath>

#include "doctest.h"
#include "posred/experiment.hpp"
#include "posred/ralm.hpp"
#include "support.hpp"

using namespace posred;
using posred::testing::TestRng;

namespace {

// All indices nonneg except the off-diagonal of A, which is all zero.
StructureMasks simple_masks(Index r, Index m, Index p) {
  StructureMasks s;
  s.a.zero = Matrix::Ones(r, r) - Matrix::Identity(r, r);
  s.a.nonneg = Matrix::Zero(r, r);
  s.b = {Matrix::Zero(r, m), Matrix::Ones(r, m)};
  s.c = {Matrix::Zero(p, r), Matrix::Ones(p, r)};
  return s;
}

Multipliers zero_multipliers(Index r, Index m, Index p) {
  return {MatrixTriple::zeros(r, m, p), MatrixTriple::zeros(r, m, p)};
}

struct Desk {
  StateSpaceSystem full;
  ReducedInit init;
  StructureMasks masks;
};

Desk desk_instance(std::uint64_t seed, int n, int r) {
  GeneratorSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.density = 0.15;
  const io::NetworkFile net = generate_network(spec, {1, n / 2}, {1, n - 1});
  Desk d;
  d.full = loopy_laplacian_system(net.graph, net.inputs, net.outputs, 0.1);
  const Matrix pi = characteristic_matrix(baseline_clustering(net.graph, r), n);
  d.init = cluster_reduce(d.full, pi, choose_alpha(aggregate_dynamics(d.full.A(), pi)));
  d.masks = structure_masks(d.init);
  return d;
}

}  // namespace

TEST_CASE("constraint values and violations") {
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << -1, 0.0, -0.3, -1;
  b << 0.2, -0.3;
  c << 0.5, 0.0;
  const StateSpaceSystem red(a, b, c);
  StructureMasks masks = simple_masks(2, 1, 1);
  masks.a.zero(1, 0) = 0.0;
  masks.a.nonneg(1, 0) = 1.0;
  const MatrixTriple g = constraint_values(red, masks);
  CHECK(g.a(1, 0) == doctest::Approx(0.3));
  CHECK(g.a(0, 0) == 0.0);
  CHECK(g.b(1, 0) == doctest::Approx(0.3));
  const MatrixTriple v = constraint_violations(red, masks);
  CHECK(v.a(1, 0) == doctest::Approx(0.3));
  CHECK(v.a(0, 1) == 0.0);
  CHECK(v.b(0, 0) == 0.0);
  CHECK(v.b(1, 0) == doctest::Approx(0.3));
  CHECK(v.c.maxCoeff() == 0.0);
  CHECK(max_violation(red, masks) == doctest::Approx(0.3));

  Matrix az = a;
  az(0, 1) = -0.2;
  CHECK(constraint_violations(StateSpaceSystem(az, b, c), masks).a(0, 1) == doctest::Approx(0.2));
}

TEST_CASE("Lagrangian value") {
  TestRng rng(71);
  const StateSpaceSystem full = rng.positive_system(5, 1, 1);
  Matrix a = Matrix::Identity(2, 2) * -1.0;

  // Feasible, zero multipliers: L = F.
  const StateSpaceSystem feasible(a, Matrix::Constant(2, 1, 0.5), Matrix::Constant(1, 2, 0.5));
  const StructureMasks masks = simple_masks(2, 1, 1);
  const Multipliers zero = zero_multipliers(2, 1, 1);
  CHECK(lagrangian(full, feasible, zero, 10.0, masks) == doctest::Approx(cost_F(full, feasible)));

  // B_r = 0 makes F vanish; one violated nn entry of C_r.
  Matrix c(1, 2);
  c << -0.3, 0.5;
  const StateSpaceSystem violated(a, Matrix::Zero(2, 1), c);
  CHECK(lagrangian(full, violated, zero, 10.0, masks) == doctest::Approx(0.45).epsilon(1e-14));

  // With zero multipliers the penalty is proportional to rho.
  for (double rho : {1.0, 10.0, 123.0}) {
    CHECK(penalty(violated, zero, rho, masks) == doctest::Approx(0.045 * rho).epsilon(1e-14));
  }

  // Equality terms use gamma: (g + gamma / rho)^2.
  Multipliers with_gamma = zero;
  with_gamma.gamma.a(0, 1) = 1.0;
  CHECK(penalty(feasible, with_gamma, 10.0, masks) == doctest::Approx(5.0 * 0.01).epsilon(1e-14));
}

TEST_CASE("penalty gradient") {
  const StructureMasks masks = simple_masks(2, 1, 1);
  Matrix b(2, 1);
  b << 0.4, -0.3;
  const StateSpaceSystem red(Matrix::Identity(2, 2) * -1.0, b, Matrix::Constant(1, 2, 0.2));
  const GradientBundle g = penalty_egrad(red, zero_multipliers(2, 1, 1), 10.0, masks);
  CHECK(g.gB(1, 0) == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(g.gB(0, 0) == 0.0);
  CHECK(g.gA.norm() == 0.0);
  CHECK(g.gC.norm() == 0.0);

  // No active constraints: the Lagrangian gradient is the cost gradient.
  TestRng rng(72);
  const StateSpaceSystem full = rng.positive_system(6, 1, 1);
  const StateSpaceSystem feasible(Matrix::Identity(2, 2) * -1.0, Matrix::Constant(2, 1, 0.3),
                                  Matrix::Constant(1, 2, 0.3));
  const SylvesterQuadruple q = solve_coupling(full, feasible);
  const GradientBundle lg =
      lagrangian_egrad(full, feasible, zero_multipliers(2, 1, 1), 10.0, masks, q);
  const GradientBundle fg = egrad_F(full, feasible, q);
  CHECK(lg.gA == fg.gA);
  CHECK(lg.gB == fg.gB);
  CHECK(lg.gC == fg.gC);
}

TEST_CASE("penalty gradient matches central differences of the penalty") {
  TestRng rng(73);
  for (int trial = 0; trial < 5; ++trial) {
    StructureMasks masks;
    auto split = [&](Index rows, Index cols, bool diag_free) {
      BlockMask m{Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
          if (diag_free && i == j) continue;
          (rng.uniform() < 0.5 ? m.zero : m.nonneg)(i, j) = 1.0;
        }
      return m;
    };
    masks.a = split(3, 3, true);
    masks.b = split(3, 2, false);
    masks.c = split(2, 3, false);
    Multipliers mult{{rng.uniform_matrix(3, 3, 0, 10).cwiseProduct(masks.a.nonneg),
                      rng.uniform_matrix(3, 2, 0, 10).cwiseProduct(masks.b.nonneg),
                      rng.uniform_matrix(2, 3, 0, 10).cwiseProduct(masks.c.nonneg)},
                     {rng.uniform_matrix(3, 3, -1.5, 1.5).cwiseProduct(masks.a.zero),
                      rng.uniform_matrix(3, 2, -1.5, 1.5).cwiseProduct(masks.b.zero),
                      rng.uniform_matrix(2, 3, -1.5, 1.5).cwiseProduct(masks.c.zero)}};
    const StateSpaceSystem red(rng.gaussian(3, 3), rng.gaussian(3, 2), rng.gaussian(2, 3));
    const double rho = 10.0;
    const GradientBundle g = penalty_egrad(red, mult, rho, masks);
    const double h = 1e-6;
    for (int k = 0; k < 10; ++k) {
      const Matrix da = rng.gaussian(3, 3), db = rng.gaussian(3, 2), dc = rng.gaussian(2, 3);
      const StateSpaceSystem plus(red.A() + h * da, red.B() + h * db, red.C() + h * dc);
      const StateSpaceSystem minus(red.A() - h * da, red.B() - h * db, red.C() - h * dc);
      const double fd = (penalty(plus, mult, rho, masks) - penalty(minus, mult, rho, masks)) / (2 * h);
      const double an = (g.gA.array() * da.array()).sum() + (g.gB.array() * db.array()).sum() +
                        (g.gC.array() * dc.array()).sum();
      CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("Riemannian gradient of the Lagrangian matches directional differences") {
  TestRng rng(74);
  for (int trial = 0; trial < 3; ++trial) {
    const StateSpaceSystem full = rng.positive_system(8, 2, 2);
    StructureMasks masks = simple_masks(3, 2, 2);
    masks.a.zero(1, 0) = 0.0;
    masks.a.nonneg(1, 0) = 1.0;
    masks.b.nonneg(0, 1) = 0.0;
    masks.b.zero(0, 1) = 1.0;
    AugmentedLagrangian model(full, masks);
    const ReducedPoint x = rng.point(3, 2, 2);
    Multipliers mult = zero_multipliers(3, 2, 2);
    mult.lambda.b = rng.uniform_matrix(3, 2, 0, 10).cwiseProduct(masks.b.nonneg);
    mult.gamma.a = rng.uniform_matrix(3, 3, -1.5, 1.5).cwiseProduct(masks.a.zero);
    const TangentVector grad = model.riemannian_gradient(x, mult, 10.0);
    for (int k = 0; k < 20; ++k) {
      TangentVector xi = rng.tangent(3, 2, 2);
      xi *= 1.0 / norm(x, xi);
      const double h = 1e-6;
      const double fd = (model.value(retract(x, xi, h), mult, 10.0).lagrangian -
                         model.value(retract(x, xi, -h), mult, 10.0).lagrangian) /
                        (2 * h);
      const double an = inner(x, grad, xi);
      CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("hyper-parameter update") {
  RalmConfig config;
  const StructureMasks masks = simple_masks(2, 1, 1);
  const ReducedPoint x = init_factorize(-Matrix::Identity(2, 2), Matrix::Constant(2, 1, 0.5),
                                        Matrix::Constant(1, 2, 0.5));
  RalmConfig zero_start = config;
  zero_start.lambda0 = 0.0;
  RalmState s = initial_state(x, masks, zero_start);
  s.sigma = MatrixTriple::zeros(2, 1, 1);

  RalmState next = update_hypers(s, x.system(), masks, zero_start);
  CHECK(next.multipliers.lambda.max_coeff() == 0.0);
  CHECK(next.multipliers.gamma.a.norm() == 0.0);
  CHECK(next.rho == s.rho);
  CHECK(next.eps == doctest::Approx(0.95 * s.eps));

  // One equality residual g = 0.1 on the A off-diagonal.
  Matrix a = -Matrix::Identity(2, 2);
  a(0, 1) = -0.1;
  next = update_hypers(s, StateSpaceSystem(a, Matrix::Constant(2, 1, 0.5), Matrix::Constant(1, 2, 0.5)),
                       masks, zero_start);
  CHECK(next.multipliers.gamma.a(0, 1) == doctest::Approx(1.0));
  CHECK(next.rho == doctest::Approx(10.1));

  // lambda at its upper bound stays there under a positive residual.
  RalmState capped = s;
  capped.multipliers.lambda.b(0, 0) = 10.0;
  Matrix b = Matrix::Constant(2, 1, 0.5);
  b(0, 0) = -0.2;
  next = update_hypers(capped, StateSpaceSystem(-Matrix::Identity(2, 2), b, Matrix::Constant(1, 2, 0.5)),
                       masks, zero_start);
  CHECK(next.multipliers.lambda.b(0, 0) == 10.0);

  // eps never drops below eps_min.
  RalmState tiny = s;
  tiny.eps = config.eps_min;
  CHECK(update_hypers(tiny, x.system(), masks, config).eps == config.eps_min);
}

TEST_CASE("multipliers stay in their boxes and off the masks") {
  TestRng rng(75);
  RalmConfig config;
  const StructureMasks masks = simple_masks(3, 2, 2);
  RalmState s = initial_state(rng.point(3, 2, 2), masks, config);
  for (int k = 0; k < 50; ++k) {
    const StateSpaceSystem red(rng.gaussian(3, 3) * 3, rng.gaussian(3, 2) * 3, rng.gaussian(2, 3) * 3);
    const RalmState next = update_hypers(s, red, masks, config);
    for (const Matrix* l : {&next.multipliers.lambda.a, &next.multipliers.lambda.b, &next.multipliers.lambda.c}) {
      CHECK(l->minCoeff() >= config.lambda_min);
      CHECK(l->maxCoeff() <= config.lambda_max);
    }
    for (const Matrix* g : {&next.multipliers.gamma.a, &next.multipliers.gamma.b, &next.multipliers.gamma.c}) {
      CHECK(g->minCoeff() >= config.gamma_min);
      CHECK(g->maxCoeff() <= config.gamma_max);
    }
    CHECK(next.multipliers.lambda.a.cwiseProduct(masks.a.zero).norm() == 0.0);
    CHECK(next.multipliers.gamma.b.cwiseProduct(masks.b.nonneg).norm() == 0.0);
    CHECK(next.multipliers.lambda.a.diagonal().norm() == 0.0);
    CHECK(next.rho >= s.rho);
    CHECK(next.eps <= s.eps);
    s = next;
  }
}

TEST_CASE("config validation") {
  RalmConfig c;
  CHECK_NOTHROW(c.validate());
  c.theta_rho = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = RalmConfig{};
  c.theta_eps = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = RalmConfig{};
  c.eps_min = 2.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = RalmConfig{};
  c.d_min = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = RalmConfig{};
  c.lambda0 = 11.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("subsolver descends monotonically") {
  const Desk d = desk_instance(3, 10, 3);
  RalmConfig config;
  AugmentedLagrangian model(d.full, d.masks);
  RalmState s = initial_state(init_factorize(d.init.A, d.init.B, d.init.C), d.masks, config);
  const SubsolveResult sub = subsolve(s, model, config);
  CHECK(sub.iterations > 0);
  CHECK(sub.final_value < sub.initial_value);
  for (std::size_t i = 1; i < sub.accepted_values.size(); ++i) {
    CHECK(sub.accepted_values[i] <= sub.accepted_values[i - 1]);
  }
  CHECK(sub.point.valid());
  CHECK(linalg::spectral_abscissa(sub.point.system_matrix()) < 0.0);
}

TEST_CASE("subsolver returns a stationary start unchanged") {
  TestRng rng(76);
  const StateSpaceSystem full = rng.positive_system(3, 1, 1);
  const ReducedInit init = cluster_reduce(full, Matrix::Identity(3, 3), 0.0);
  const StructureMasks masks = structure_masks(init);
  RalmConfig config;
  config.lambda0 = 0.0;
  AugmentedLagrangian model(full, masks);
  RalmState s = initial_state(init_factorize(init.A, init.B, init.C), masks, config);
  s.eps = 1e-6;
  const SubsolveResult sub = subsolve(s, model, config);
  CHECK(sub.iterations == 0);
  CHECK(distance(sub.point, s.point) <= 1e-12);
}

TEST_CASE("optimize with max_outer = 0 returns the factorized start") {
  const Desk d = desk_instance(4, 8, 3);
  RalmConfig config;
  config.max_outer = 0;
  const RalmResult res = optimize(d.full, d.init, d.masks, config);
  CHECK(res.report.outer_iterations == 0);
  CHECK(res.report.trace.empty());
  CHECK((res.reduced.A() - d.init.A).norm() <= 1e-10 * d.init.A.norm());
  CHECK(res.reduced.B() == d.init.B);
  CHECK(res.reduced.C() == d.init.C);
}

TEST_CASE("optimize from the exact model stays there") {
  TestRng rng(77);
  const StateSpaceSystem full = rng.positive_system(4, 1, 2);
  const ReducedInit init = cluster_reduce(full, Matrix::Identity(4, 4), 0.0);
  const StructureMasks masks = structure_masks(init);
  RalmConfig config;
  config.lambda0 = 0.0;
  config.max_outer = 60;
  H2Objective objective(full);
  CHECK(objective.cost(full) == doctest::Approx(-0.5 * objective.full_h2_squared()).epsilon(1e-10));
  const RalmResult res = optimize(full, init, masks, config);
  CHECK(error_metrics(full, res.reduced).h2_rel <= 1e-6);
  CHECK(distance(res.point, init_factorize(init.A, init.B, init.C)) <= 1e-6);
}

TEST_CASE("desk optimization improves on clustering and ends structurally feasible") {
  const Desk d = desk_instance(5, 12, 4);
  RalmConfig config;
  config.max_outer = 150;
  const RalmResult res = optimize(d.full, d.init, d.masks, config);
  const ErrorMetrics before = error_metrics(d.full, d.init.system());
  const ErrorMetrics after = error_metrics(d.full, res.reduced);
  CHECK(after.h2_rel < before.h2_rel);

  // Trace invariants.
  for (std::size_t i = 1; i < res.report.trace.size(); ++i) {
    CHECK(res.report.trace[i].rho >= res.report.trace[i - 1].rho);
    CHECK(res.report.trace[i].eps <= res.report.trace[i - 1].eps);
    CHECK(res.report.trace[i].eps >= config.eps_min);
  }
  REQUIRE(res.report.projected);
  const StateSpaceSystem& red = res.reduced;
  CHECK(is_stable(red));
  CHECK(is_metzler(red.A(), 0.0));
  CHECK(is_nonneg(red.B(), 0.0));
  CHECK(is_nonneg(red.C(), 0.0));
  CHECK(red.A().cwiseProduct(d.masks.a.zero).norm() == 0.0);
  CHECK(red.B().cwiseProduct(d.masks.b.zero).norm() == 0.0);
  CHECK(red.C().cwiseProduct(d.masks.c.zero).norm() == 0.0);
}

TEST_CASE("project_structure") {
  const StructureMasks masks = simple_masks(2, 1, 1);
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << -1, 1e-9, -2e-9, -1;
  b << -1e-9, 0.5;
  c << 0.5, -3e-10;
  const StateSpaceSystem p = project_structure(StateSpaceSystem(a, b, c), masks);
  CHECK(p.A()(0, 1) == 0.0);
  CHECK(p.A()(1, 0) == 0.0);
  CHECK(p.A()(0, 0) == -1.0);
  CHECK(p.B()(0, 0) == 0.0);
  CHECK(p.B()(1, 0) == 0.5);
  CHECK(p.C()(0, 1) == 0.0);
}
