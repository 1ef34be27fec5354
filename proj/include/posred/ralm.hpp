#pragma once

// Riemannian augmented Lagrangian method for
//
//   minimize F(A_r, B_r, C_r) over (J, R, Q, B_r, C_r) in M_r,
//   A_r = (J - R) Q,
//   -V_ij <= 0 on nn(V0),  -V_ij = 0 on z(V0),  V in {A_r, B_r, C_r},
//
// with a Riemannian conjugate-gradient inner solver.

#include <string>
#include <vector>

#include "posred/h2_objective.hpp"
#include "posred/network.hpp"

namespace posred {

// One array per constrained block, shaped like A_r, B_r and C_r.
struct MatrixTriple {
  Matrix a;
  Matrix b;
  Matrix c;

  static MatrixTriple zeros(Index r, Index m, Index p);
  double max_coeff() const;
};

struct Multipliers {
  MatrixTriple lambda;  // inequality, supported on nn indices
  MatrixTriple gamma;   // equality, supported on z indices
};

struct LineSearchConfig {
  double sufficient_decrease = 1e-4;
  double backtrack = 0.5;
  int max_halvings = 50;
  double initial_step = 1.0;  // first trial; later trials double the last accepted step
};

// Defaults are the experiment parameters of the method.
struct RalmConfig {
  double sigma0 = 0.0;
  double rho0 = 10.0;
  double lambda0 = 1.0;
  double lambda_min = 0.0;
  double lambda_max = 10.0;
  double gamma0 = 0.0;
  double gamma_min = -1.5;
  double gamma_max = 1.5;
  double eps0 = 1.0;
  double eps_min = 1e-16;
  double theta_rho = 1.01;
  double theta_eps = 0.95;
  double theta_sigma = 0.9;
  double d_min = 1e-8;
  int max_outer = 1000;
  int subsolver_iters = 100;
  // Early out: distance < d_min on this many consecutive outer iterations
  // with max violation <= early_stop_violation. Outer iterations whose subsolve
  // took no step because the gradient was already below eps are not counted.
  int early_stop_streak = 5;
  double early_stop_violation = 1e-8;
  LineSearchConfig line_search;

  void validate() const;
};

struct RalmState {
  ReducedPoint point;
  Multipliers multipliers;
  double rho = 0.0;
  double eps = 0.0;
  MatrixTriple sigma;  // per-constraint violation of the previous outer iteration
  int outer_iter = 0;
  double last_distance = 0.0;
  double step_hint = 1.0;  // last accepted line-search step
};

// g = -V on masked indices, 0 elsewhere.
MatrixTriple constraint_values(const StateSpaceSystem& red, const StructureMasks& masks);

// max(0, g) on nn indices, |g| on z indices, 0 elsewhere.
MatrixTriple constraint_violations(const StateSpaceSystem& red, const StructureMasks& masks);
double max_violation(const StateSpaceSystem& red, const StructureMasks& masks);

// (rho/2) sum_V [ sum_nn max(0, lambda/rho + g)^2 + sum_z (g + gamma/rho)^2 ]
double penalty(const StateSpaceSystem& red, const Multipliers& mult, double rho,
               const StructureMasks& masks);

// Gradient of the penalty term: -rho (U_i . chi_nn + U_e . chi_z) per block.
GradientBundle penalty_egrad(const StateSpaceSystem& red, const Multipliers& mult, double rho,
                             const StructureMasks& masks);

double lagrangian(const StateSpaceSystem& full, const StateSpaceSystem& red,
                  const Multipliers& mult, double rho, const StructureMasks& masks);

GradientBundle lagrangian_egrad(const StateSpaceSystem& full, const StateSpaceSystem& red,
                                const Multipliers& mult, double rho,
                                const StructureMasks& masks, const SylvesterQuadruple& quad);

// Lagrangian bound to one original system and mask set, with the H2 cache.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const StateSpaceSystem& full, StructureMasks masks);

  struct Value {
    double lagrangian = 0.0;
    double cost = 0.0;
  };

  Value value(const ReducedPoint& x, const Multipliers& mult, double rho);
  TangentVector riemannian_gradient(const ReducedPoint& x, const Multipliers& mult, double rho);
  EuclideanGradient euclidean_gradient(const ReducedPoint& x, const Multipliers& mult,
                                       double rho);

  H2Objective& objective() { return objective_; }
  const StructureMasks& masks() const { return masks_; }

 private:
  H2Objective objective_;
  StructureMasks masks_;
};

struct SubsolveResult {
  ReducedPoint point;
  int iterations = 0;
  bool stalled = false;  // line search exhausted its halvings
  double initial_value = 0.0;
  double final_value = 0.0;
  double final_gradient_norm = 0.0;
  double last_step = 0.0;
  // Lagrangian after every accepted step (starting value first).
  std::vector<double> accepted_values;
};

// Riemannian conjugate gradient (Polak-Ribiere+, transported directions,
// steepest-descent restart, Armijo backtracking) on x -> L_rho(x, lambda, gamma).
SubsolveResult subsolve(const RalmState& state, AugmentedLagrangian& model,
                        const RalmConfig& config);

RalmState update_hypers(const RalmState& state, const StateSpaceSystem& red,
                        const StructureMasks& masks, const RalmConfig& config);

// Multipliers and tracker initialised from the config over the mask supports.
RalmState initial_state(const ReducedPoint& x0, const StructureMasks& masks,
                        const RalmConfig& config);

struct RalmTraceRow {
  int outer_iter = 0;
  double lagrangian = 0.0;
  double cost = 0.0;
  double max_violation = 0.0;
  double rho = 0.0;
  double eps = 0.0;
  double distance = 0.0;
  int subsolver_iters = 0;
};

struct RalmReport {
  std::vector<RalmTraceRow> trace;
  std::string termination;  // "converged", "early_stop", "max_outer"
  int outer_iterations = 0;
  int stalls = 0;
  double violation_before_projection = 0.0;
  bool projected = false;
  std::vector<std::string> warnings;
};

struct RalmResult {
  ReducedPoint point;         // final manifold iterate
  StateSpaceSystem reduced;   // after the feasibility projection (if it kept stability)
  RalmReport report;
};

// Sets z entries to 0 and clamps negative nn entries to 0.
StateSpaceSystem project_structure(const StateSpaceSystem& red, const StructureMasks& masks);

RalmResult optimize(const StateSpaceSystem& full, const ReducedInit& init,
                    const StructureMasks& masks, const RalmConfig& config);

}  // namespace posred
