#include "posred/h2_objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace posred {

namespace {

void check_pair(const StateSpaceSystem& full, const StateSpaceSystem& red) {
  if (full.inputs() != red.inputs() || full.outputs() != red.outputs()) {
    throw ValidationError("H2 objective: original and reduced systems differ in m or p");
  }
}

SylvesterQuadruple reduced_gramians(const StateSpaceSystem& red, SylvesterQuadruple quad) {
  const Matrix& ar = red.A();
  linalg::SylvesterSolution s = linalg::solve_lyapunov(ar.transpose(), red.B() * red.B().transpose());
  linalg::SylvesterSolution t = linalg::solve_lyapunov(ar, red.C().transpose() * red.C());
  quad.S = std::move(s.X);
  quad.s_report = s.report;
  quad.T = std::move(t.X);
  quad.t_report = t.report;
  return quad;
}

}  // namespace

double SylvesterQuadruple::max_relative_residual() const {
  return std::max({x_report.relative_residual, y_report.relative_residual,
                   s_report.relative_residual, t_report.relative_residual});
}

SylvesterQuadruple solve_coupling(const StateSpaceSystem& full, const StateSpaceSystem& red) {
  check_pair(full, red);
  const Matrix& a = full.A();
  const Matrix& ar = red.A();
  SylvesterQuadruple quad;
  linalg::SylvesterSolution x =
      linalg::solve_sylvester(a, ar.transpose(), full.B() * red.B().transpose());
  linalg::SylvesterSolution y =
      linalg::solve_sylvester(a.transpose(), ar, -(full.C().transpose() * red.C()));
  quad.X = std::move(x.X);
  quad.x_report = x.report;
  quad.Y = std::move(y.X);
  quad.y_report = y.report;
  return reduced_gramians(red, std::move(quad));
}

CostTerms cost_terms(const StateSpaceSystem& full, const StateSpaceSystem& red,
                     const SylvesterQuadruple& quad) {
  const Matrix& br = red.B();
  const Matrix& cr = red.C();
  const double c_quad = (cr * quad.S * cr.transpose()).trace();
  const double c_cross = (cr * quad.X.transpose() * full.C().transpose()).trace();
  const double b_quad = (br.transpose() * quad.T * br).trace();
  const double b_cross = (full.B().transpose() * quad.Y * br).trace();
  CostTerms out;
  out.value = 0.5 * c_quad - c_cross;
  out.alternative = 0.5 * b_quad + b_cross;
  out.scale = 0.5 * std::abs(c_quad) + std::abs(c_cross) + 0.5 * std::abs(b_quad) +
              std::abs(b_cross);
  return out;
}

namespace {

double checked(const CostTerms& terms) {
  if (std::abs(terms.value - terms.alternative) > kCostAgreementTolerance * terms.scale) {
    throw NumericalIntegrityError("cost_F: trace expressions disagree (" +
                                  std::to_string(terms.value) + " vs " +
                                  std::to_string(terms.alternative) + ")");
  }
  return terms.value;
}

}  // namespace

double cost_F(const StateSpaceSystem& full, const StateSpaceSystem& red) {
  const SylvesterQuadruple quad = solve_coupling(full, red);
  return checked(cost_terms(full, red, quad));
}

GradientBundle egrad_F(const StateSpaceSystem& full, const StateSpaceSystem& red,
                       const SylvesterQuadruple& quad) {
  check_pair(full, red);
  const Index n = full.states();
  const Index r = red.states();
  if (quad.X.rows() != n || quad.X.cols() != r || quad.Y.rows() != n || quad.Y.cols() != r ||
      quad.S.rows() != r || quad.T.rows() != r) {
    throw ValidationError("egrad_F: quadruple shape does not match the systems");
  }
  GradientBundle g;
  g.gA = quad.T * quad.S + quad.Y.transpose() * quad.X;
  g.gB = quad.T * red.B() + quad.Y.transpose() * full.B();
  g.gC = red.C() * quad.S - full.C() * quad.X;
  return g;
}

FactorGradients chain_to_factors(const Matrix& gA, const ReducedPoint& x) {
  if (gA.rows() != x.order() || gA.cols() != x.order()) {
    throw ValidationError("chain_to_factors: gradient shape mismatch");
  }
  FactorGradients out;
  out.gJ = gA * x.Q;
  out.gR = -out.gJ;
  out.gQ = -(x.J + x.R) * gA;
  return out;
}

H2Objective::H2Objective(StateSpaceSystem full)
    : full_(std::move(full)), left_(full_.A()), left_transposed_(full_.A().transpose()) {
  const Matrix p =
      linalg::solve_lyapunov(full_.A().transpose(), full_.B() * full_.B().transpose()).X;
  full_h2_sq_ = std::max(0.0, (full_.C() * p * full_.C().transpose()).trace());
}

bool H2Objective::cached(const StateSpaceSystem& red) const {
  return key_ && key_->A().rows() == red.A().rows() && key_->B().cols() == red.B().cols() &&
         key_->C().rows() == red.C().rows() && key_->A() == red.A() && key_->B() == red.B() &&
         key_->C() == red.C();
}

const SylvesterQuadruple& H2Objective::quadruple(const StateSpaceSystem& red) {
  if (cached(red)) return quad_;
  check_pair(full_, red);
  key_.reset();
  SylvesterQuadruple quad;
  linalg::SylvesterSolution x =
      left_.solve(red.A().transpose(), full_.B() * red.B().transpose());
  linalg::SylvesterSolution y =
      left_transposed_.solve(red.A(), -(full_.C().transpose() * red.C()));
  quad.X = std::move(x.X);
  quad.x_report = x.report;
  quad.Y = std::move(y.X);
  quad.y_report = y.report;
  quad_ = reduced_gramians(red, std::move(quad));
  key_ = red;
  return quad_;
}

CostTerms H2Objective::cost_terms(const StateSpaceSystem& red) {
  return posred::cost_terms(full_, red, quadruple(red));
}

double H2Objective::cost(const StateSpaceSystem& red) { return checked(cost_terms(red)); }

GradientBundle H2Objective::gradient(const StateSpaceSystem& red) {
  return egrad_F(full_, red, quadruple(red));
}

double H2Objective::h2_error(const StateSpaceSystem& red) {
  return std::sqrt(std::max(0.0, 2.0 * cost(red) + full_h2_sq_));
}

}  // namespace posred
