#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "posred/linalg.hpp"
#include "posred/lti.hpp"
#include "posred/manifold.hpp"

namespace posred::testing {

class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * uniform());
  }

  Matrix gaussian(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }
  Matrix uniform_matrix(Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = uniform(lo, hi);
    return m;
  }

  Matrix skew(Index n) {
    const Matrix g = gaussian(n, n);
    return 0.5 * (g - g.transpose());
  }
  // M^T M + 0.1 I with Gaussian M.
  Matrix spd(Index n) {
    const Matrix g = gaussian(n, n);
    return g.transpose() * g + 0.1 * Matrix::Identity(n, n);
  }
  // Gaussian matrix shifted to a spectral abscissa in [-1.5, -0.5].
  Matrix stable(Index n) {
    Matrix a = gaussian(n, n);
    const double mu = linalg::spectral_abscissa(a);
    a -= (mu + uniform(0.5, 1.5)) * Matrix::Identity(n, n);
    return a;
  }
  StateSpaceSystem stable_system(Index n, Index m, Index p) {
    Matrix a = stable(n);
    return {a, gaussian(n, m), gaussian(p, n)};
  }
  // Metzler with nonnegative B, C, stabilized by a negative diagonal.
  StateSpaceSystem positive_system(Index n, Index m, Index p) {
    Matrix a = uniform_matrix(n, n);
    for (Index i = 0; i < n; ++i) a(i, i) = -(a.row(i).sum() + a.col(i).sum() + 0.2);
    return {a, uniform_matrix(n, m), uniform_matrix(p, n)};
  }

  ReducedPoint point(Index r, Index m, Index p) {
    return {skew(r), spd(r), spd(r), gaussian(r, m), gaussian(p, r)};
  }
  TangentVector tangent(Index r, Index m, Index p) {
    const Matrix gr = gaussian(r, r), gq = gaussian(r, r);
    return {skew(r), 0.5 * (gr + gr.transpose()), 0.5 * (gq + gq.transpose()),
            gaussian(r, m), gaussian(p, r)};
  }

 private:
  std::mt19937_64 engine_;
};

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

// ||G||_H2^2 by adaptive Gauss-Kronrod quadrature of (1/pi) int_0^inf ||G(iw)||_F^2 dw
// after the substitution w = tan(theta).
double h2_squared_by_quadrature(const StateSpaceSystem& sys);

// max over a log-spaced grid of `points` frequencies in [lo, hi], plus w = 0.
double hinf_by_grid(const StateSpaceSystem& sys, int points, double lo = 1e-4, double hi = 1e4);

}  // namespace posred::testing
