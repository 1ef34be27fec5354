#include "posred/ralm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

#include "posred/kernels.hpp"

namespace posred {

MatrixTriple MatrixTriple::zeros(Index r, Index m, Index p) {
  return {Matrix::Zero(r, r), Matrix::Zero(r, m), Matrix::Zero(p, r)};
}

double MatrixTriple::max_coeff() const {
  double out = 0.0;
  for (const Matrix* m : {&a, &b, &c}) {
    if (m->size() > 0) out = std::max(out, m->maxCoeff());
  }
  return out;
}

void RalmConfig::validate() const {
  auto fail = [](const char* what) { throw ValidationError(std::string("RalmConfig: ") + what); };
  if (!(rho0 > 0.0)) fail("rho0 must be positive");
  if (!(theta_rho > 1.0)) fail("theta_rho must exceed 1");
  if (!(theta_eps > 0.0 && theta_eps < 1.0)) fail("theta_eps must lie in (0, 1)");
  if (!(theta_sigma > 0.0 && theta_sigma < 1.0)) fail("theta_sigma must lie in (0, 1)");
  if (!(eps_min > 0.0 && eps_min < eps0)) fail("need 0 < eps_min < eps0");
  if (!(d_min > 0.0)) fail("d_min must be positive");
  if (!(lambda_min >= 0.0 && lambda_min <= lambda_max)) fail("need 0 <= lambda_min <= lambda_max");
  if (!(lambda0 >= lambda_min && lambda0 <= lambda_max)) fail("lambda0 outside its box");
  if (!(gamma_min <= gamma_max)) fail("need gamma_min <= gamma_max");
  if (!(gamma0 >= gamma_min && gamma0 <= gamma_max)) fail("gamma0 outside its box");
  if (!(sigma0 >= 0.0)) fail("sigma0 must be nonnegative");
  if (max_outer < 0) fail("max_outer must be nonnegative");
  if (subsolver_iters <= 0) fail("subsolver_iters must be positive");
  if (!(line_search.sufficient_decrease > 0.0 && line_search.sufficient_decrease < 1.0)) {
    fail("sufficient decrease constant must lie in (0, 1)");
  }
  if (!(line_search.backtrack > 0.0 && line_search.backtrack < 1.0)) {
    fail("backtracking factor must lie in (0, 1)");
  }
  if (line_search.max_halvings <= 0) fail("max_halvings must be positive");
  if (!(line_search.initial_step > 0.0)) fail("initial step must be positive");
}

namespace {

std::span<const double> view(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

Matrix masked_support(const BlockMask& m) { return m.zero + m.nonneg; }

void check_masks(const StateSpaceSystem& red, const StructureMasks& masks) {
  masks.validate(red.states(), red.inputs(), red.outputs());
}

struct BlockPenalty {
  double sum = 0.0;
  Matrix u;
};

BlockPenalty block_penalty(const Matrix& v, const Matrix& lambda, const Matrix& gamma,
                           const BlockMask& mask, double rho) {
  if (lambda.rows() != v.rows() || lambda.cols() != v.cols() || gamma.rows() != v.rows() ||
      gamma.cols() != v.cols()) {
    throw ValidationError("penalty: multiplier shape mismatch");
  }
  BlockPenalty out{0.0, Matrix(v.rows(), v.cols())};
  out.sum = kernels::masked_penalty({view(v), view(lambda), view(gamma), view(mask.nonneg),
                                     view(mask.zero)},
                                    1.0 / rho, {out.u.data(), static_cast<std::size_t>(out.u.size())});
  return out;
}

}  // namespace

MatrixTriple constraint_values(const StateSpaceSystem& red, const StructureMasks& masks) {
  check_masks(red, masks);
  return {-red.A().cwiseProduct(masked_support(masks.a)),
          -red.B().cwiseProduct(masked_support(masks.b)),
          -red.C().cwiseProduct(masked_support(masks.c))};
}

MatrixTriple constraint_violations(const StateSpaceSystem& red, const StructureMasks& masks) {
  const MatrixTriple g = constraint_values(red, masks);
  auto block = [](const Matrix& gv, const BlockMask& m) -> Matrix {
    return gv.cwiseMax(0.0).cwiseProduct(m.nonneg) + gv.cwiseAbs().cwiseProduct(m.zero);
  };
  return {block(g.a, masks.a), block(g.b, masks.b), block(g.c, masks.c)};
}

double max_violation(const StateSpaceSystem& red, const StructureMasks& masks) {
  return constraint_violations(red, masks).max_coeff();
}

double penalty(const StateSpaceSystem& red, const Multipliers& mult, double rho,
               const StructureMasks& masks) {
  if (!(rho > 0.0)) throw ValidationError("penalty: rho must be positive");
  check_masks(red, masks);
  const double sum =
      block_penalty(red.A(), mult.lambda.a, mult.gamma.a, masks.a, rho).sum +
      block_penalty(red.B(), mult.lambda.b, mult.gamma.b, masks.b, rho).sum +
      block_penalty(red.C(), mult.lambda.c, mult.gamma.c, masks.c, rho).sum;
  return 0.5 * rho * sum;
}

GradientBundle penalty_egrad(const StateSpaceSystem& red, const Multipliers& mult, double rho,
                             const StructureMasks& masks) {
  if (!(rho > 0.0)) throw ValidationError("penalty_egrad: rho must be positive");
  check_masks(red, masks);
  // d/dV of (rho/2) u^2 with dg/dV = -1 on masked entries; the A masks carry
  // no diagonal, so the diagonal of A_r is unconstrained.
  return {-rho * block_penalty(red.A(), mult.lambda.a, mult.gamma.a, masks.a, rho).u,
          -rho * block_penalty(red.B(), mult.lambda.b, mult.gamma.b, masks.b, rho).u,
          -rho * block_penalty(red.C(), mult.lambda.c, mult.gamma.c, masks.c, rho).u};
}

double lagrangian(const StateSpaceSystem& full, const StateSpaceSystem& red,
                  const Multipliers& mult, double rho, const StructureMasks& masks) {
  return cost_F(full, red) + penalty(red, mult, rho, masks);
}

GradientBundle lagrangian_egrad(const StateSpaceSystem& full, const StateSpaceSystem& red,
                                const Multipliers& mult, double rho,
                                const StructureMasks& masks, const SylvesterQuadruple& quad) {
  GradientBundle g = egrad_F(full, red, quad);
  const GradientBundle p = penalty_egrad(red, mult, rho, masks);
  g.gA += p.gA;
  g.gB += p.gB;
  g.gC += p.gC;
  return g;
}

AugmentedLagrangian::AugmentedLagrangian(const StateSpaceSystem& full, StructureMasks masks)
    : objective_(full), masks_(std::move(masks)) {}

AugmentedLagrangian::Value AugmentedLagrangian::value(const ReducedPoint& x,
                                                      const Multipliers& mult, double rho) {
  const StateSpaceSystem red = x.system();
  Value v;
  v.cost = objective_.cost(red);
  v.lagrangian = v.cost + penalty(red, mult, rho, masks_);
  return v;
}

EuclideanGradient AugmentedLagrangian::euclidean_gradient(const ReducedPoint& x,
                                                          const Multipliers& mult, double rho) {
  const StateSpaceSystem red = x.system();
  GradientBundle g = objective_.gradient(red);
  const GradientBundle p = penalty_egrad(red, mult, rho, masks_);
  g.gA += p.gA;
  FactorGradients f = chain_to_factors(g.gA, x);
  return {std::move(f.gJ), std::move(f.gR), std::move(f.gQ), g.gB + p.gB, g.gC + p.gC};
}

TangentVector AugmentedLagrangian::riemannian_gradient(const ReducedPoint& x,
                                                       const Multipliers& mult, double rho) {
  return egrad_to_rgrad(x, euclidean_gradient(x, mult, rho));
}

namespace {

// Trial points that leave the SPD cone numerically or break the solvers are
// treated as infinitely bad.
std::optional<double> try_value(AugmentedLagrangian& model, const ReducedPoint& x,
                                const Multipliers& mult, double rho) {
  try {
    x.validate();
    const double v = model.value(x, mult, rho).lagrangian;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

SubsolveResult subsolve(const RalmState& state, AugmentedLagrangian& model,
                        const RalmConfig& config) {
  const Multipliers& mult = state.multipliers;
  const double rho = state.rho;
  const LineSearchConfig& ls = config.line_search;

  SubsolveResult out;
  ReducedPoint x = state.point;
  double value = model.value(x, mult, rho).lagrangian;
  TangentVector grad = model.riemannian_gradient(x, mult, rho);
  double grad_sq = inner(x, grad, grad);
  TangentVector dir = -grad;
  double step = state.step_hint > 0.0 ? state.step_hint : ls.initial_step;

  out.initial_value = value;
  out.accepted_values.push_back(value);

  while (out.iterations < config.subsolver_iters && std::sqrt(grad_sq) > state.eps) {
    double slope = inner(x, grad, dir);
    if (!(slope < 0.0)) {
      dir = -grad;
      slope = -grad_sq;
    }
    double t = 2.0 * step;
    std::optional<ReducedPoint> accepted;
    double accepted_value = value;
    for (int h = 0; h < ls.max_halvings; ++h, t *= ls.backtrack) {
      ReducedPoint trial = retract(x, dir, t);
      const std::optional<double> v = try_value(model, trial, mult, rho);
      if (v && *v <= value + ls.sufficient_decrease * t * slope) {
        accepted = std::move(trial);
        accepted_value = *v;
        break;
      }
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
    const TangentVector next_grad = model.riemannian_gradient(*accepted, mult, rho);
    const TangentVector moved_grad = transport(x, *accepted, grad);
    const TangentVector moved_dir = transport(x, *accepted, dir);
    const double beta =
        std::max(0.0, inner(*accepted, next_grad, next_grad - moved_grad) / grad_sq);
    dir = beta * moved_dir - next_grad;

    x = std::move(*accepted);
    value = accepted_value;
    grad = next_grad;
    grad_sq = inner(x, grad, grad);
    step = t;
    ++out.iterations;
    out.accepted_values.push_back(value);
    if (grad_sq == 0.0) break;
  }
  out.point = std::move(x);
  out.final_value = value;
  out.final_gradient_norm = std::sqrt(grad_sq);
  out.last_step = step;
  return out;
}

RalmState initial_state(const ReducedPoint& x0, const StructureMasks& masks,
                        const RalmConfig& config) {
  const Index r = x0.order();
  const Index m = x0.B.cols();
  const Index p = x0.C.rows();
  masks.validate(r, m, p);
  RalmState s;
  s.point = x0;
  s.multipliers.lambda = {config.lambda0 * masks.a.nonneg, config.lambda0 * masks.b.nonneg,
                          config.lambda0 * masks.c.nonneg};
  s.multipliers.gamma = {config.gamma0 * masks.a.zero, config.gamma0 * masks.b.zero,
                         config.gamma0 * masks.c.zero};
  s.sigma = {config.sigma0 * masked_support(masks.a), config.sigma0 * masked_support(masks.b),
             config.sigma0 * masked_support(masks.c)};
  s.rho = config.rho0;
  s.eps = config.eps0;
  s.step_hint = config.line_search.initial_step / 2.0;
  return s;
}

RalmState update_hypers(const RalmState& state, const StateSpaceSystem& red,
                        const StructureMasks& masks, const RalmConfig& config) {
  const MatrixTriple g = constraint_values(red, masks);
  RalmState next = state;
  auto step_lambda = [&](const Matrix& lambda, const Matrix& gv, const BlockMask& m) -> Matrix {
    const Matrix moved =
        (lambda + state.rho * gv).cwiseMax(config.lambda_min).cwiseMin(config.lambda_max);
    return moved.cwiseProduct(m.nonneg);
  };
  auto step_gamma = [&](const Matrix& gamma, const Matrix& gv, const BlockMask& m) -> Matrix {
    const Matrix moved =
        (gamma + state.rho * gv).cwiseMax(config.gamma_min).cwiseMin(config.gamma_max);
    return moved.cwiseProduct(m.zero);
  };
  const Multipliers& mult = state.multipliers;
  next.multipliers.lambda = {step_lambda(mult.lambda.a, g.a, masks.a),
                             step_lambda(mult.lambda.b, g.b, masks.b),
                             step_lambda(mult.lambda.c, g.c, masks.c)};
  next.multipliers.gamma = {step_gamma(mult.gamma.a, g.a, masks.a),
                            step_gamma(mult.gamma.b, g.b, masks.b),
                            step_gamma(mult.gamma.c, g.c, masks.c)};

  const MatrixTriple violation = constraint_violations(red, masks);
  if (violation.max_coeff() > config.theta_sigma * state.sigma.max_coeff()) {
    next.rho = state.rho * config.theta_rho;
  }
  next.sigma = violation;
  next.eps = std::max(config.eps_min, config.theta_eps * state.eps);
  return next;
}

StateSpaceSystem project_structure(const StateSpaceSystem& red, const StructureMasks& masks) {
  check_masks(red, masks);
  auto block = [](const Matrix& v, const BlockMask& m) -> Matrix {
    Matrix out = v;
    for (Index j = 0; j < v.cols(); ++j) {
      for (Index i = 0; i < v.rows(); ++i) {
        if (m.zero(i, j) != 0.0) out(i, j) = 0.0;
        if (m.nonneg(i, j) != 0.0 && out(i, j) < 0.0) out(i, j) = 0.0;
      }
    }
    return out;
  };
  return {block(red.A(), masks.a), block(red.B(), masks.b), block(red.C(), masks.c)};
}

RalmResult optimize(const StateSpaceSystem& full, const ReducedInit& init,
                    const StructureMasks& masks, const RalmConfig& config) {
  config.validate();
  if (init.B.cols() != full.inputs() || init.C.rows() != full.outputs()) {
    throw ValidationError("optimize: initial model does not match the original's m and p");
  }
  masks.validate(init.A.rows(), init.B.cols(), init.C.rows());

  const ReducedPoint x0 = init_factorize(init.A, init.B, init.C);
  RalmState state = initial_state(x0, masks, config);
  AugmentedLagrangian model(full, masks);

  RalmResult result;
  RalmReport& report = result.report;
  report.termination = "max_outer";
  int streak = 0;

  for (int k = 0; k < config.max_outer; ++k) {
    const SubsolveResult sub = subsolve(state, model, config);
    if (sub.stalled) ++report.stalls;

    const StateSpaceSystem red = sub.point.system();
    const double abscissa = linalg::spectral_abscissa(red.A());
    if (!(abscissa < 0.0)) {
      // Cannot happen for a valid manifold point; indicates a broken invariant.
      throw NumericalError("optimize: iterate lost stability");
    }
    const double dist = distance(state.point, sub.point);
    const double violation = max_violation(red, masks);

    RalmTraceRow row;
    row.outer_iter = k;
    row.lagrangian = sub.final_value;
    row.cost = model.value(sub.point, state.multipliers, state.rho).cost;
    row.max_violation = violation;
    row.rho = state.rho;
    row.eps = state.eps;
    row.distance = dist;
    row.subsolver_iters = sub.iterations;
    report.trace.push_back(row);

    state.point = sub.point;
    state.last_distance = dist;
    state.step_hint = sub.last_step;
    state.outer_iter = k + 1;

    if (dist < config.d_min && state.eps <= config.eps_min) {
      report.termination = "converged";
      break;
    }
    // A subsolve that returned without trying (gradient already below a loose
    // eps) says nothing about convergence and does not extend the streak.
    const bool attempted = sub.iterations > 0 || sub.stalled;
    if (attempted) {
      streak = (dist < config.d_min && violation <= config.early_stop_violation) ? streak + 1 : 0;
    }
    if (streak >= config.early_stop_streak) {
      report.termination = "early_stop";
      break;
    }
    state = update_hypers(state, red, masks, config);
  }
  report.outer_iterations = state.outer_iter;

  result.point = state.point;
  const StateSpaceSystem raw = state.point.system();
  report.violation_before_projection = max_violation(raw, masks);
  const StateSpaceSystem projected = project_structure(raw, masks);
  if (is_stable(projected)) {
    result.reduced = projected;
    report.projected = true;
  } else {
    result.reduced = raw;
    report.warnings.push_back(
        "feasibility projection destroyed stability; returning the unprojected iterate");
  }
  return result;
}

}  // namespace posred
