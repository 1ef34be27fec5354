#include "posred/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace posred::linalg {

namespace {

std::atomic<std::uint64_t> g_solves{0};
std::atomic<std::uint64_t> g_failures{0};
std::atomic<double> g_max_residual{0.0};

void record(const SolveReport& report) {
  g_solves.fetch_add(1, std::memory_order_relaxed);
  if (!report.ok()) {
    g_failures.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  double seen = g_max_residual.load(std::memory_order_relaxed);
  while (report.relative_residual > seen &&
         !g_max_residual.compare_exchange_weak(seen, report.relative_residual,
                                               std::memory_order_relaxed)) {
  }
}

void record_failure() {
  g_solves.fetch_add(1, std::memory_order_relaxed);
  g_failures.fetch_add(1, std::memory_order_relaxed);
}

SolveReport sylvester_report(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& x) {
  SolveReport report;
  report.residual_norm = (a * x + x * b + c).norm();
  const double rhs = c.norm();
  report.relative_residual = rhs > 0.0 ? report.residual_norm / rhs : report.residual_norm;
  return report;
}

void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(who) + ": matrix has non-finite entries");
  }
}

void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw ValidationError(std::string(who) + ": matrix must be square");
  }
}

// Solves T Z + Z S = F for upper triangular T (n x n) and S (r x r).
ComplexMatrix solve_triangular_sylvester(const ComplexMatrix& t, const ComplexMatrix& s,
                                         const ComplexMatrix& f) {
  const Index n = t.rows();
  const Index r = s.rows();
  const double scale = std::max({t.cwiseAbs().maxCoeff(), s.cwiseAbs().maxCoeff(), 1e-300});
  const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * scale;

  ComplexMatrix z(n, r);
  ComplexVector rhs(n);
  for (Index j = 0; j < r; ++j) {
    rhs = f.col(j);
    if (j > 0) rhs.noalias() -= z.leftCols(j) * s.col(j).head(j);
    const std::complex<double> shift = s(j, j);
    for (Index i = n - 1; i >= 0; --i) {
      std::complex<double> acc = rhs(i);
      for (Index k = i + 1; k < n; ++k) acc -= t(i, k) * z(k, j);
      const std::complex<double> pivot = t(i, i) + shift;
      if (std::abs(pivot) <= tiny) {
        throw SolveFailure("solve_sylvester: spectra of A and -B overlap", SolveReport{});
      }
      z(i, j) = acc / pivot;
    }
  }
  return z;
}

struct ComplexSchurFactor {
  ComplexMatrix t;
  ComplexMatrix u;
};

ComplexSchurFactor complex_schur(const Matrix& m) {
  Eigen::ComplexSchur<ComplexMatrix> schur(m.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) {
    throw NumericalError("complex Schur decomposition did not converge");
  }
  return {schur.matrixT(), schur.matrixU()};
}

// A = U T U^*, B = V S V^*; with Z = U^* X V the equation becomes
// T Z + Z S = -U^* C V.
Matrix bartels_stewart(const ComplexMatrix& left_t, const ComplexMatrix& left_u, const Matrix& b,
                       const Matrix& c) {
  const ComplexSchurFactor right = complex_schur(b);
  const ComplexMatrix f = -(left_u.adjoint() * c.cast<std::complex<double>>() * right.u);
  const ComplexMatrix z = solve_triangular_sylvester(left_t, right.t, f);
  return (left_u * z * right.u.adjoint()).real();
}

Matrix bartels_stewart(const Matrix& a, const Matrix& b, const Matrix& c) {
  const ComplexSchurFactor left = complex_schur(a);
  return bartels_stewart(left.t, left.u, b, c);
}

Matrix kronecker_solve(const Matrix& a, const Matrix& b, const Matrix& c) {
  const Index n = a.rows();
  const Index r = b.rows();
  const Index unknowns = n * r;
  if (unknowns > 4096) {
    throw ValidationError("solve_sylvester: Kronecker linearization limited to 4096 unknowns");
  }
  // vec is column-major: unknown (i, j) lives at j * n + i.
  Matrix k = Matrix::Zero(unknowns, unknowns);
  for (Index j = 0; j < r; ++j) {
    k.block(j * n, j * n, n, n) += a;
    for (Index l = 0; l < r; ++l) {
      const double blj = b(l, j);  // (B^T)(j, l)
      if (blj == 0.0) continue;
      k.block(j * n, l * n, n, n).diagonal().array() += blj;
    }
  }
  Eigen::FullPivLU<Matrix> lu(k);
  if (!lu.isInvertible()) {
    throw SolveFailure("solve_sylvester: linearized system is singular", SolveReport{});
  }
  const Vector rhs = -Eigen::Map<const Vector>(c.data(), unknowns);
  const Vector x = lu.solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), n, r);
}

SylvesterSolution finish(const Matrix& a, const Matrix& b, const Matrix& c, Matrix x,
                         const char* who) {
  SylvesterSolution out{std::move(x), {}};
  out.report = sylvester_report(a, b, c, out.X);
  record(out.report);
  if (!out.X.allFinite() || !out.report.ok()) {
    throw SolveFailure(std::string(who) + ": residual above tolerance (relative " +
                           std::to_string(out.report.relative_residual) + ")",
                       out.report);
  }
  return out;
}

void check_sylvester_shapes(const Matrix& a, const Matrix& b, const Matrix& c) {
  require_square(a, "solve_sylvester");
  require_square(b, "solve_sylvester");
  if (c.rows() != a.rows() || c.cols() != b.rows()) {
    throw ValidationError("solve_sylvester: C must be rows(A) x rows(B)");
  }
  require_finite(a, "solve_sylvester");
  require_finite(b, "solve_sylvester");
  require_finite(c, "solve_sylvester");
}

}  // namespace

ComplexVector eigenvalues(const Matrix& m) {
  require_square(m, "eigenvalues");
  require_finite(m, "eigenvalues");
  if (m.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalues: QR iteration did not converge");
  }
  return solver.eigenvalues();
}

double spectral_abscissa(const Matrix& m) {
  const ComplexVector eig = eigenvalues(m);
  if (eig.size() == 0) return -std::numeric_limits<double>::infinity();
  return eig.real().maxCoeff();
}

Matrix symmetrize(const Matrix& s) { return 0.5 * (s + s.transpose()); }

SymmetricEigen sym_eig(const Matrix& s) {
  require_square(s, "sym_eig");
  require_finite(s, "sym_eig");
  const double norm = s.norm();
  if ((s - s.transpose()).norm() > 1e-12 * norm) {
    throw ValidationError("sym_eig: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(s));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sym_eig: Jacobi/QL iteration did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix mat_exp(const Matrix& m) {
  require_square(m, "mat_exp");
  require_finite(m, "mat_exp");
  return m.exp();
}

namespace {

template <class F>
Matrix spd_function(const Matrix& p, const char* who, F&& f) {
  const SymmetricEigen eig = sym_eig(p);
  if (eig.values.size() > 0 && eig.values.minCoeff() <= 0.0) {
    throw ValidationError(std::string(who) + ": matrix is not positive definite");
  }
  const Vector mapped = eig.values.unaryExpr(f);
  return symmetrize(eig.vectors * mapped.asDiagonal() * eig.vectors.transpose());
}

}  // namespace

Matrix mat_log_spd(const Matrix& p) {
  return spd_function(p, "mat_log_spd", [](double v) { return std::log(v); });
}

Matrix mat_sqrt_spd(const Matrix& p) {
  return spd_function(p, "mat_sqrt_spd", [](double v) { return std::sqrt(v); });
}

Matrix mat_inv_sqrt_spd(const Matrix& p) {
  return spd_function(p, "mat_inv_sqrt_spd", [](double v) { return 1.0 / std::sqrt(v); });
}

Matrix mat_inv_spd(const Matrix& p) {
  return spd_function(p, "mat_inv_spd", [](double v) { return 1.0 / v; });
}

bool is_spd(const Matrix& p, double rel_tol) {
  if (p.rows() != p.cols() || !p.allFinite()) return false;
  if (p.rows() == 0) return true;
  const double norm = p.norm();
  if ((p - p.transpose()).norm() > 1e-12 * norm) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(p), Eigen::EigenvaluesOnly);
  const Vector& d = solver.eigenvalues();
  return d.minCoeff() > rel_tol * d.cwiseAbs().maxCoeff();
}

SylvesterSolution solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c,
                                  SylvesterMethod method) {
  check_sylvester_shapes(a, b, c);
  if (a.rows() == 0 || b.rows() == 0) {
    return {Matrix::Zero(a.rows(), b.rows()), {}};
  }
  Matrix x;
  try {
    x = method == SylvesterMethod::kKronecker ? kronecker_solve(a, b, c)
                                              : bartels_stewart(a, b, c);
  } catch (const SolveFailure&) {
    record_failure();
    throw;
  }
  return finish(a, b, c, std::move(x), "solve_sylvester");
}

SylvesterSolution solve_lyapunov(const Matrix& a, const Matrix& q) {
  require_square(a, "solve_lyapunov");
  if (q.rows() != a.rows() || q.cols() != a.cols()) {
    throw ValidationError("solve_lyapunov: Q must match A");
  }
  require_finite(q, "solve_lyapunov");
  if ((q - q.transpose()).norm() > 1e-12 * q.norm()) {
    throw ValidationError("solve_lyapunov: Q must be symmetric");
  }
  if (a.rows() == 0) return {Matrix(0, 0), {}};
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < 0.0)) {
    record_failure();
    throw UnstableSystemError("solve_lyapunov: A is not stable", abscissa);
  }
  const Matrix at = a.transpose();
  Matrix p;
  try {
    p = symmetrize(bartels_stewart(at, a, q));
  } catch (const SolveFailure&) {
    record_failure();
    throw;
  }
  SylvesterSolution out = finish(at, a, q, std::move(p), "solve_lyapunov");
  if (is_spd(q, 1e-10) && !is_spd(out.X, 0.0)) {
    throw NumericalError("solve_lyapunov: positive definite Q produced an indefinite P");
  }
  return out;
}

LyapunovFactor lyapunov_factor(const Matrix& a, const Matrix& b) {
  require_square(a, "lyapunov_factor");
  if (b.rows() != a.rows()) {
    throw ValidationError("lyapunov_factor: B must have rows(A) rows");
  }
  require_finite(a, "lyapunov_factor");
  require_finite(b, "lyapunov_factor");
  const Index n = a.rows();
  if (n == 0) return {ComplexMatrix(0, 0), {}};
  const ComplexSchurFactor schur = complex_schur(a);
  const ComplexMatrix& t = schur.t;
  double abscissa = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) abscissa = std::max(abscissa, t(i, i).real());
  if (!(abscissa < 0.0)) {
    record_failure();
    throw UnstableSystemError("lyapunov_factor: A is not stable", abscissa);
  }

  // With A = Z T Z^* and X = U U^* (U upper triangular), peel the trailing
  // row/column: T X + X T^* + Bt Bt^* = 0 fixes the last column of U and
  // leaves an equation of the same form on the leading block.
  ComplexMatrix bt = schur.u.adjoint() * b.cast<std::complex<double>>();
  ComplexMatrix u = ComplexMatrix::Zero(n, n);
  for (Index k = n - 1; k >= 0; --k) {
    const std::complex<double> lambda = t(k, k);
    const ComplexVector row = bt.row(k).transpose();
    const double bnorm = row.norm();
    if (bnorm == 0.0) continue;
    const double tau = bnorm / std::sqrt(-2.0 * lambda.real());
    u(k, k) = tau;
    if (k == 0) break;
    auto b1 = bt.topRows(k);
    // (T1 + conj(lambda) I) v = -(a tau^2 + B1 b^*) / tau
    ComplexVector rhs = -(t.col(k).head(k) * (tau * tau) + b1 * row.conjugate()) / tau;
    ComplexMatrix shifted = t.topLeftCorner(k, k);
    shifted.diagonal().array() += std::conj(lambda);
    const ComplexVector v =
        shifted.triangularView<Eigen::Upper>().solve(rhs);
    u.col(k).head(k) = v;
    b1.noalias() -= (v / tau) * row.transpose();
  }

  LyapunovFactor out;
  out.factor = schur.u * u;
  const Matrix p = (out.factor * out.factor.adjoint()).real();
  const Matrix q = b * b.transpose();
  out.report = sylvester_report(a, a.transpose(), q, p);
  record(out.report);
  if (!out.factor.allFinite() || !out.report.ok()) {
    throw SolveFailure("lyapunov_factor: residual above tolerance (relative " +
                           std::to_string(out.report.relative_residual) + ")",
                       out.report);
  }
  return out;
}

FactoredSylvester::FactoredSylvester(const Matrix& a) : a_(a) {
  require_square(a, "FactoredSylvester");
  require_finite(a, "FactoredSylvester");
  ComplexSchurFactor f = complex_schur(a);
  schur_t_ = std::move(f.t);
  schur_u_ = std::move(f.u);
}

SylvesterSolution FactoredSylvester::solve(const Matrix& b, const Matrix& c) const {
  check_sylvester_shapes(a_, b, c);
  if (a_.rows() == 0 || b.rows() == 0) {
    return {Matrix::Zero(a_.rows(), b.rows()), {}};
  }
  Matrix x;
  try {
    x = bartels_stewart(schur_t_, schur_u_, b, c);
  } catch (const SolveFailure&) {
    record_failure();
    throw;
  }
  return finish(a_, b, c, std::move(x), "FactoredSylvester::solve");
}

SolveStatistics solve_statistics() {
  return {g_solves.load(), g_failures.load(), g_max_residual.load()};
}

void reset_solve_statistics() {
  g_solves.store(0);
  g_failures.store(0);
  g_max_residual.store(0.0);
}

}  // namespace posred::linalg
