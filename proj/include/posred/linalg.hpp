#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "posred/errors.hpp"

namespace posred {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

namespace linalg {

// Relative residual ceiling for a solve to be declared successful.
inline constexpr double kSolveTolerance = 1e-8;

struct SolveReport {
  double residual_norm = 0.0;      // ||residual||_F
  double relative_residual = 0.0;  // residual scaled by ||rhs||_F
  bool ok() const { return relative_residual <= kSolveTolerance; }
};

class SolveFailure : public NumericalError {
 public:
  SolveFailure(const std::string& what, SolveReport report)
      : NumericalError(what), report_(report) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

// All eigenvalues with multiplicity (Hessenberg reduction + shifted QR).
ComplexVector eigenvalues(const Matrix& m);

// max Re(eig(m)).
double spectral_abscissa(const Matrix& m);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // orthogonal, columns are eigenvectors
};

// Rejects inputs that are not symmetric within 1e-12 * ||s||_F.
SymmetricEigen sym_eig(const Matrix& s);

Matrix symmetrize(const Matrix& s);

Matrix mat_exp(const Matrix& m);

// Spectral functions of SPD matrices. All reject inputs with a nonpositive
// eigenvalue.
Matrix mat_log_spd(const Matrix& p);
Matrix mat_sqrt_spd(const Matrix& p);
Matrix mat_inv_sqrt_spd(const Matrix& p);
Matrix mat_inv_spd(const Matrix& p);

bool is_spd(const Matrix& p, double rel_tol = 1e-12);

enum class SylvesterMethod {
  kBartelsStewart,  // complex Schur of both operators, triangular sweep
  kKronecker,       // dense (I (x) A + B^T (x) I) vec(X) = -vec(C)
};

struct SylvesterSolution {
  Matrix X;
  SolveReport report;
};

// Solves A X + X B + C = 0. Throws SolveFailure when the spectra of A and -B
// overlap or the residual exceeds kSolveTolerance.
SylvesterSolution solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c,
                                  SylvesterMethod method = SylvesterMethod::kBartelsStewart);

// Solves A^T P + P A + Q = 0 for stable A and symmetric Q. P is symmetrized;
// when Q is positive definite, P is verified SPD.
SylvesterSolution solve_lyapunov(const Matrix& a, const Matrix& q);

struct LyapunovFactor {
  ComplexMatrix factor;  // P = factor * factor^*
  SolveReport report;    // residual of the assembled P
};

// Solves A P + P A^T + B B^T = 0 for stable A directly in factored form
// (complex Schur plus a column-by-column triangular recursion). Quantities
// such as ||C F||_F then carry rounding linearly rather than through the
// trace of C P C^T, which keeps tiny norms measurable.
LyapunovFactor lyapunov_factor(const Matrix& a, const Matrix& b);

// A X + X B + C = 0 with a fixed left operator A whose Schur form is computed
// once. Used for the large-by-small coupling equations, where A is the
// full-order dynamics and B changes at every optimizer step.
class FactoredSylvester {
 public:
  explicit FactoredSylvester(const Matrix& a);

  SylvesterSolution solve(const Matrix& b, const Matrix& c) const;
  Index size() const { return a_.rows(); }

 private:
  Matrix a_;
  ComplexMatrix schur_t_;
  ComplexMatrix schur_u_;
};

// Process-wide record of every Sylvester/Lyapunov solve. Counters are atomic.
struct SolveStatistics {
  std::uint64_t solves = 0;
  std::uint64_t failures = 0;
  double max_relative_residual = 0.0;  // over successful solves
};

SolveStatistics solve_statistics();
void reset_solve_statistics();

}  // namespace linalg
}  // namespace posred
