#pragma once

// H2 cost of a reduced model relative to a fixed original system,
//
//   F(A_r, B_r, C_r) = 1/2 tr(C_r S C_r^T - 2 C_r X^T C^T)
//                    = 1/2 tr(B_r^T T B_r + 2 B^T Y B_r),
//
// with X, Y, S, T the solutions of
//
//   A X + X A_r^T + B B_r^T = 0        A^T Y + Y A_r - C^T C_r = 0
//   A_r S + S A_r^T + B_r B_r^T = 0    A_r^T T + T A_r + C_r^T C_r = 0.
//
// ||G - G_r||_H2^2 = 2 F + ||G||_H2^2, so minimizing F minimizes the H2 error.

#include <optional>

#include "posred/manifold.hpp"

namespace posred {

struct SylvesterQuadruple {
  Matrix X;  // n x r
  Matrix Y;  // n x r
  Matrix S;  // r x r, symmetric
  Matrix T;  // r x r, symmetric
  linalg::SolveReport x_report, y_report, s_report, t_report;

  double max_relative_residual() const;
};

// Euclidean gradients with respect to A_r, B_r, C_r.
struct GradientBundle {
  Matrix gA;
  Matrix gB;
  Matrix gC;
};

struct FactorGradients {
  Matrix gJ;
  Matrix gR;
  Matrix gQ;
};

// Raised when the two trace expressions for F disagree beyond 1e-8 relative.
class NumericalIntegrityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline constexpr double kCostAgreementTolerance = 1e-8;

SylvesterQuadruple solve_coupling(const StateSpaceSystem& full, const StateSpaceSystem& red);

struct CostTerms {
  double value = 0.0;        // C-side expression (primary)
  double alternative = 0.0;  // B-side expression (cross-check)
  double scale = 0.0;        // sum of |trace terms|, the agreement yardstick
};

CostTerms cost_terms(const StateSpaceSystem& full, const StateSpaceSystem& red,
                     const SylvesterQuadruple& quad);

// Primary value after the agreement check.
double cost_F(const StateSpaceSystem& full, const StateSpaceSystem& red);

GradientBundle egrad_F(const StateSpaceSystem& full, const StateSpaceSystem& red,
                       const SylvesterQuadruple& quad);

// Chain rule through A_r = (J - R) Q:
//   gJ = gA Q,  gR = -gA Q,  gQ = (J - R)^T gA = -(J + R) gA.
FactorGradients chain_to_factors(const Matrix& gA, const ReducedPoint& x);

// Evaluator bound to one original system. The Schur forms of A and A^T are
// computed once, and the quadruple of the most recent reduced model is cached
// so that value and gradient at the same point share one set of solves. Not
// thread-safe; use one instance per optimization run.
class H2Objective {
 public:
  explicit H2Objective(StateSpaceSystem full);

  const StateSpaceSystem& full() const { return full_; }
  double full_h2_squared() const { return full_h2_sq_; }

  const SylvesterQuadruple& quadruple(const StateSpaceSystem& red);
  CostTerms cost_terms(const StateSpaceSystem& red);
  // Throws NumericalIntegrityError when the two expressions disagree.
  double cost(const StateSpaceSystem& red);
  GradientBundle gradient(const StateSpaceSystem& red);

  // ||G - G_r||_H2 through the cost identity (clamped at zero).
  double h2_error(const StateSpaceSystem& red);

 private:
  bool cached(const StateSpaceSystem& red) const;

  StateSpaceSystem full_;
  linalg::FactoredSylvester left_;             // A X + X (.) + (.) = 0
  linalg::FactoredSylvester left_transposed_;  // A^T Y + Y (.) + (.) = 0
  double full_h2_sq_ = 0.0;

  std::optional<StateSpaceSystem> key_;
  SylvesterQuadruple quad_;
};

}  // namespace posred
