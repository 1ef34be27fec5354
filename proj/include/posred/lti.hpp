#pragma once

#include <functional>
#include <vector>

#include "posred/linalg.hpp"

namespace posred {

// Continuous-time LTI system  x' = A x + B u,  y = C x.  A reduced model is
// the same type with fewer states.
class StateSpaceSystem {
 public:
  StateSpaceSystem() = default;
  StateSpaceSystem(Matrix a, Matrix b, Matrix c);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }

  Index states() const { return a_.rows(); }
  Index inputs() const { return b_.cols(); }
  Index outputs() const { return c_.rows(); }

 private:
  Matrix a_, b_, c_;
};

struct ErrorMetrics {
  double h2_abs = 0.0;
  double h2_rel = 0.0;
  double hinf_abs = 0.0;
  double hinf_rel = 0.0;
};

inline constexpr double kStabilityTolerance = 1e-12;
inline constexpr double kNonnegTolerance = 1e-12;

// Stable iff max Re(eig(A)) < -tol.
bool is_stable(const Matrix& a, double tol = kStabilityTolerance);
bool is_stable(const StateSpaceSystem& sys, double tol = kStabilityTolerance);

bool is_metzler(const Matrix& a, double tol = kNonnegTolerance);
bool is_nonneg(const Matrix& m, double tol = kNonnegTolerance);

// Metzler A with nonnegative B and C.
bool is_positive_system(const StateSpaceSystem& sys, double tol = kNonnegTolerance);

// G(i omega) = C (i omega I - A)^{-1} B.
ComplexMatrix frequency_response(const StateSpaceSystem& sys, double omega);
double sigma_max(const StateSpaceSystem& sys, double omega);

// sqrt(tr(C P C^T)) with A P + P A^T + B B^T = 0. Throws UnstableSystemError.
double h2_norm(const StateSpaceSystem& sys);

struct HinfResult {
  double norm = 0.0;
  double peak_frequency = 0.0;  // where the best lower bound was attained
};

// Hamiltonian bisection refined to relative width 1e-6. The returned norm is
// the certified upper end of the final bracket.
HinfResult hinf(const StateSpaceSystem& sys, double rel_width = 1e-6);
inline double hinf_norm(const StateSpaceSystem& sys) { return hinf(sys).norm; }

// Realization of G - G_r: diag(A, A_r), [B; B_r], [C, -C_r].
StateSpaceSystem error_system(const StateSpaceSystem& full, const StateSpaceSystem& red);

ErrorMetrics error_metrics(const StateSpaceSystem& full, const StateSpaceSystem& red);

// u(t) is written into the provided vector (length = inputs()).
using InputSignal = std::function<void(double t, Eigen::Ref<Vector> u)>;

struct SimulationOptions {
  // Internal RK4 step is at most this fraction of the fastest time constant
  // 1 / rho(A), and never larger than the output grid spacing.
  double time_constant_fraction = 1e-3;
};

// Fixed-step RK4. Returns outputs y = C x as a p x |t_grid| matrix. t_grid
// must start at 0 and be strictly increasing.
Matrix simulate(const StateSpaceSystem& sys, const InputSignal& u, const Vector& x0,
                const std::vector<double>& t_grid, const SimulationOptions& options = {});

}  // namespace posred
