#include "posred/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "posred/kernels.hpp"

namespace posred {

StateSpaceSystem::StateSpaceSystem(Matrix a, Matrix b, Matrix c)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
  if (a_.rows() != a_.cols()) throw ValidationError("StateSpaceSystem: A must be square");
  if (b_.rows() != a_.rows()) throw ValidationError("StateSpaceSystem: B must have n rows");
  if (c_.cols() != a_.rows()) throw ValidationError("StateSpaceSystem: C must have n columns");
  if (a_.rows() == 0) throw ValidationError("StateSpaceSystem: empty state space");
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite()) {
    throw ValidationError("StateSpaceSystem: non-finite entries");
  }
}

bool is_stable(const Matrix& a, double tol) { return linalg::spectral_abscissa(a) < -tol; }

bool is_stable(const StateSpaceSystem& sys, double tol) { return is_stable(sys.A(), tol); }

bool is_metzler(const Matrix& a, double tol) {
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j && a(i, j) < -tol) return false;
    }
  }
  return true;
}

bool is_nonneg(const Matrix& m, double tol) { return m.size() == 0 || m.minCoeff() >= -tol; }

bool is_positive_system(const StateSpaceSystem& sys, double tol) {
  return is_metzler(sys.A(), tol) && is_nonneg(sys.B(), tol) && is_nonneg(sys.C(), tol);
}

ComplexMatrix frequency_response(const StateSpaceSystem& sys, double omega) {
  ComplexMatrix resolvent = -sys.A().cast<std::complex<double>>();
  resolvent.diagonal().array() += std::complex<double>(0.0, omega);
  const ComplexMatrix x =
      resolvent.partialPivLu().solve(sys.B().cast<std::complex<double>>());
  return sys.C().cast<std::complex<double>>() * x;
}

double sigma_max(const StateSpaceSystem& sys, double omega) {
  const ComplexMatrix g = frequency_response(sys, omega);
  if (g.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(g);
  return svd.singularValues()(0);
}

namespace {

void require_stable(const StateSpaceSystem& sys, const char* who) {
  const double abscissa = linalg::spectral_abscissa(sys.A());
  if (!(abscissa < -kStabilityTolerance)) {
    throw UnstableSystemError(std::string(who) + ": system is not stable (norm undefined)",
                              abscissa);
  }
}

// Frequencies w >= 0 where H(gamma) has eigenvalues on the imaginary axis.
std::vector<double> imaginary_axis_frequencies(const StateSpaceSystem& sys, double gamma) {
  const Index n = sys.states();
  const Matrix& a = sys.A();
  Matrix h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = a;
  h.topRightCorner(n, n) = (sys.B() * sys.B().transpose()) / gamma;
  h.bottomLeftCorner(n, n) = -(sys.C().transpose() * sys.C()) / gamma;
  h.bottomRightCorner(n, n) = -a.transpose();
  const ComplexVector eig = linalg::eigenvalues(h);
  const double tol = 1e-7 * std::max(1.0, h.norm());
  std::vector<double> freqs;
  for (Index i = 0; i < eig.size(); ++i) {
    if (std::abs(eig(i).real()) <= tol && eig(i).imag() >= -tol) {
      freqs.push_back(std::abs(eig(i).imag()));
    }
  }
  return freqs;
}

}  // namespace

double h2_norm(const StateSpaceSystem& sys) {
  require_stable(sys, "h2_norm");
  const ComplexMatrix f = linalg::lyapunov_factor(sys.A(), sys.B()).factor;
  return (sys.C().cast<std::complex<double>>() * f).norm();
}

HinfResult hinf(const StateSpaceSystem& sys, double rel_width) {
  require_stable(sys, "hinf_norm");
  HinfResult best;
  auto probe = [&](double w) {
    const double s = sigma_max(sys, w);
    if (s > best.norm) {
      best.norm = s;
      best.peak_frequency = w;
    }
  };
  probe(0.0);
  const ComplexVector poles = linalg::eigenvalues(sys.A());
  for (Index i = 0; i < poles.size(); ++i) {
    probe(std::abs(poles(i).imag()));
    probe(std::abs(poles(i)));
  }
  for (double w = 1e-3; w <= 1e3; w *= std::sqrt(10.0)) probe(w);
  if (best.norm == 0.0) return best;

  double lb = best.norm;
  // Returns true (and lifts lb) if gamma <= ||G||_inf.
  auto crosses = [&](double gamma) {
    bool hit = false;
    for (double w : imaginary_axis_frequencies(sys, gamma)) {
      const double s = sigma_max(sys, w);
      if (s >= gamma * (1.0 - 1e-9)) hit = true;
      if (s > best.norm) {
        best.norm = s;
        best.peak_frequency = w;
      }
    }
    lb = std::max(lb, best.norm);
    return hit;
  };

  double ub = 2.0 * lb;
  int doublings = 0;
  while (crosses(ub)) {
    ub *= 2.0;
    if (++doublings > 200) throw NumericalError("hinf_norm: no finite upper bound found");
  }
  while (ub - lb > rel_width * lb) {
    const double gamma = 0.5 * (lb + ub);
    if (crosses(gamma)) {
      lb = std::max(lb, gamma);
    } else {
      ub = gamma;
    }
  }
  // When a probed value is already the peak, certify it to near machine width.
  const double tight = lb * (1.0 + 1e-10);
  if (tight < ub && !crosses(tight)) ub = tight;
  best.norm = ub;
  return best;
}

StateSpaceSystem error_system(const StateSpaceSystem& full, const StateSpaceSystem& red) {
  if (full.inputs() != red.inputs() || full.outputs() != red.outputs()) {
    throw ValidationError("error_system: input/output dimensions differ");
  }
  const Index n = full.states();
  const Index r = red.states();
  Matrix a = Matrix::Zero(n + r, n + r);
  a.topLeftCorner(n, n) = full.A();
  a.bottomRightCorner(r, r) = red.A();
  Matrix b(n + r, full.inputs());
  b << full.B(), red.B();
  Matrix c(full.outputs(), n + r);
  c << full.C(), -red.C();
  return {std::move(a), std::move(b), std::move(c)};
}

ErrorMetrics error_metrics(const StateSpaceSystem& full, const StateSpaceSystem& red) {
  const StateSpaceSystem err = error_system(full, red);
  require_stable(red, "error_metrics");
  ErrorMetrics m;
  const double g2 = h2_norm(full);
  const double ginf = hinf_norm(full);
  if (g2 == 0.0 || ginf == 0.0) {
    throw ValidationError("error_metrics: original system has zero transfer function");
  }
  m.h2_abs = h2_norm(err);
  m.hinf_abs = hinf_norm(err);
  m.h2_rel = m.h2_abs / g2;
  m.hinf_rel = m.hinf_abs / ginf;
  return m;
}

Matrix simulate(const StateSpaceSystem& sys, const InputSignal& u, const Vector& x0,
                const std::vector<double>& t_grid, const SimulationOptions& options) {
  const Index n = sys.states();
  const Index m = sys.inputs();
  if (x0.size() != n) throw ValidationError("simulate: x0 has wrong length");
  if (t_grid.empty() || t_grid.front() != 0.0) {
    throw ValidationError("simulate: time grid must start at 0");
  }
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) {
      throw ValidationError("simulate: time grid must be strictly increasing");
    }
  }

  const ComplexVector eig = linalg::eigenvalues(sys.A());
  const double radius = eig.size() ? eig.cwiseAbs().maxCoeff() : 0.0;
  const double h_cap = radius > 0.0 ? options.time_constant_fraction / radius
                                    : std::numeric_limits<double>::infinity();

  const Matrix& a = sys.A();
  const Matrix& b = sys.B();
  const std::span<const double> a_span(a.data(), static_cast<std::size_t>(a.size()));
  const std::span<const double> b_span(b.data(), static_cast<std::size_t>(b.size()));
  const auto un = static_cast<std::size_t>(n);
  const auto um = static_cast<std::size_t>(m);

  Vector uvec(m);
  auto rhs = [&](double t, const Vector& x, Vector& out) {
    out.setZero();
    kernels::gemv_add(a_span, un, un, {x.data(), un}, {out.data(), un});
    if (m > 0) {
      u(t, uvec);
      kernels::gemv_add(b_span, un, um, {uvec.data(), um}, {out.data(), un});
    }
  };
  auto axpy = [&](double alpha, const Vector& x, Vector& y) {
    kernels::axpy(alpha, {x.data(), un}, {y.data(), un});
  };

  Matrix y(sys.outputs(), static_cast<Index>(t_grid.size()));
  Vector x = x0;
  Vector k1(n), k2(n), k3(n), k4(n), tmp(n);
  y.col(0) = sys.C() * x;
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double span = t_grid[k] - t_grid[k - 1];
    const auto steps = static_cast<long>(std::max(1.0, std::ceil(span / h_cap)));
    const double h = span / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const double t = t_grid[k - 1] + static_cast<double>(s) * h;
      rhs(t, x, k1);
      tmp = x;
      axpy(0.5 * h, k1, tmp);
      rhs(t + 0.5 * h, tmp, k2);
      tmp = x;
      axpy(0.5 * h, k2, tmp);
      rhs(t + 0.5 * h, tmp, k3);
      tmp = x;
      axpy(h, k3, tmp);
      rhs(t + h, tmp, k4);
      axpy(h / 6.0, k1, x);
      axpy(h / 3.0, k2, x);
      axpy(h / 3.0, k3, x);
      axpy(h / 6.0, k4, x);
    }
    y.col(static_cast<Index>(k)) = sys.C() * x;
  }
  return y;
}

}  // namespace posred
