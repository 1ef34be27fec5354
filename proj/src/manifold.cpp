#include "posred/manifold.hpp"

#include <cmath>

namespace posred {

namespace {

Matrix skew(const Matrix& m) { return 0.5 * (m - m.transpose()); }

// tr(P^-1 xi P^-1 eta)
double spd_inner(const Matrix& p, const Matrix& xi, const Matrix& eta) {
  const Eigen::LLT<Matrix> chol(p);
  if (chol.info() != Eigen::Success) throw ValidationError("inner: factor is not SPD");
  const Matrix a = chol.solve(xi);
  const Matrix b = chol.solve(eta);
  return (a.transpose().cwiseProduct(b)).sum();
}

// P^{1/2} exp(P^{-1/2} xi P^{-1/2}) P^{1/2}, equal to P exp(P^-1 xi).
Matrix spd_exp(const Matrix& p, const Matrix& xi) {
  const linalg::SymmetricEigen eig = linalg::sym_eig(p);
  if (eig.values.minCoeff() <= 0.0) throw ValidationError("retract: factor is not SPD");
  const Vector root = eig.values.cwiseSqrt();
  const Matrix half = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
  const Matrix inv_half = eig.vectors * root.cwiseInverse().asDiagonal() * eig.vectors.transpose();
  const Matrix inner_arg = linalg::symmetrize(inv_half * xi * inv_half);
  const linalg::SymmetricEigen e2 = linalg::sym_eig(inner_arg);
  const Matrix expm =
      e2.vectors * e2.values.array().exp().matrix().asDiagonal() * e2.vectors.transpose();
  return linalg::symmetrize(half * expm * half);
}

double spd_log_distance_sq(const Matrix& p, const Matrix& q) {
  const Matrix inv_half = linalg::mat_inv_sqrt_spd(p);
  return linalg::mat_log_spd(linalg::symmetrize(inv_half * q * inv_half)).squaredNorm();
}

// (Q P^-1)^{1/2} = P^{1/2} (P^{-1/2} Q P^{-1/2})^{1/2} P^{-1/2}
Matrix spd_transport_factor(const Matrix& p, const Matrix& q) {
  const Matrix half = linalg::mat_sqrt_spd(p);
  const Matrix inv_half = linalg::mat_inv_sqrt_spd(p);
  const Matrix middle = linalg::mat_sqrt_spd(linalg::symmetrize(inv_half * q * inv_half));
  return half * middle * inv_half;
}

void require_same_shape(const ReducedPoint& x, const TangentVector& xi, const char* who) {
  if (xi.dJ.rows() != x.J.rows() || xi.dJ.cols() != x.J.cols() || xi.dR.rows() != x.R.rows() ||
      xi.dR.cols() != x.R.cols() || xi.dQ.rows() != x.Q.rows() || xi.dQ.cols() != x.Q.cols() ||
      xi.dB.rows() != x.B.rows() || xi.dB.cols() != x.B.cols() || xi.dC.rows() != x.C.rows() ||
      xi.dC.cols() != x.C.cols()) {
    throw ValidationError(std::string(who) + ": tangent shape does not match the point");
  }
}

}  // namespace

void ReducedPoint::validate() const {
  const Index r = J.rows();
  if (r == 0 || J.cols() != r || R.rows() != r || R.cols() != r || Q.rows() != r ||
      Q.cols() != r || B.rows() != r || C.cols() != r) {
    throw ValidationError("ReducedPoint: inconsistent factor shapes");
  }
  if (!J.allFinite() || !R.allFinite() || !Q.allFinite() || !B.allFinite() || !C.allFinite()) {
    throw ValidationError("ReducedPoint: non-finite entries");
  }
  if ((J + J.transpose()).norm() > 1e-12 * std::max(J.norm(), 1e-300) && J.norm() > 0.0) {
    throw ValidationError("ReducedPoint: J is not skew-symmetric");
  }
  if (!linalg::is_spd(R, 1e-12)) throw ValidationError("ReducedPoint: R is not SPD");
  if (!linalg::is_spd(Q, 1e-12)) throw ValidationError("ReducedPoint: Q is not SPD");
}

bool ReducedPoint::valid() const noexcept {
  try {
    validate();
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

TangentVector TangentVector::zeros_like(const ReducedPoint& x) {
  return {Matrix::Zero(x.J.rows(), x.J.cols()), Matrix::Zero(x.R.rows(), x.R.cols()),
          Matrix::Zero(x.Q.rows(), x.Q.cols()), Matrix::Zero(x.B.rows(), x.B.cols()),
          Matrix::Zero(x.C.rows(), x.C.cols())};
}

TangentVector& TangentVector::operator+=(const TangentVector& o) {
  dJ += o.dJ;
  dR += o.dR;
  dQ += o.dQ;
  dB += o.dB;
  dC += o.dC;
  return *this;
}

TangentVector& TangentVector::operator-=(const TangentVector& o) {
  dJ -= o.dJ;
  dR -= o.dR;
  dQ -= o.dQ;
  dB -= o.dB;
  dC -= o.dC;
  return *this;
}

TangentVector& TangentVector::operator*=(double s) {
  dJ *= s;
  dR *= s;
  dQ *= s;
  dB *= s;
  dC *= s;
  return *this;
}

TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
TangentVector operator*(double s, TangentVector a) { return a *= s; }
TangentVector operator-(TangentVector a) { return a *= -1.0; }

TangentVector project_tangent(const EuclideanGradient& ambient) {
  return {skew(ambient.gJ), linalg::symmetrize(ambient.gR), linalg::symmetrize(ambient.gQ),
          ambient.gB, ambient.gC};
}

double inner(const ReducedPoint& x, const TangentVector& xi, const TangentVector& eta) {
  require_same_shape(x, xi, "inner");
  require_same_shape(x, eta, "inner");
  return xi.dJ.cwiseProduct(eta.dJ).sum() + spd_inner(x.R, xi.dR, eta.dR) +
         spd_inner(x.Q, xi.dQ, eta.dQ) + xi.dB.cwiseProduct(eta.dB).sum() +
         xi.dC.cwiseProduct(eta.dC).sum();
}

double norm(const ReducedPoint& x, const TangentVector& xi) {
  return std::sqrt(std::max(0.0, inner(x, xi, xi)));
}

double euclidean_pairing(const EuclideanGradient& eg, const TangentVector& xi) {
  return eg.gJ.cwiseProduct(xi.dJ).sum() + eg.gR.cwiseProduct(xi.dR).sum() +
         eg.gQ.cwiseProduct(xi.dQ).sum() + eg.gB.cwiseProduct(xi.dB).sum() +
         eg.gC.cwiseProduct(xi.dC).sum();
}

TangentVector egrad_to_rgrad(const ReducedPoint& x, const EuclideanGradient& eg) {
  return {skew(eg.gJ), linalg::symmetrize(x.R * linalg::symmetrize(eg.gR) * x.R),
          linalg::symmetrize(x.Q * linalg::symmetrize(eg.gQ) * x.Q), eg.gB, eg.gC};
}

ReducedPoint retract(const ReducedPoint& x, const TangentVector& xi, double step) {
  require_same_shape(x, xi, "retract");
  if (step == 0.0) return x;
  ReducedPoint y;
  y.J = skew(x.J + step * xi.dJ);
  y.R = spd_exp(x.R, step * linalg::symmetrize(xi.dR));
  y.Q = spd_exp(x.Q, step * linalg::symmetrize(xi.dQ));
  y.B = x.B + step * xi.dB;
  y.C = x.C + step * xi.dC;
  return y;
}

double distance(const ReducedPoint& x, const ReducedPoint& y) {
  if (x.J.rows() != y.J.rows() || x.B.cols() != y.B.cols() || x.C.rows() != y.C.rows()) {
    throw ValidationError("distance: points have different shapes");
  }
  const double sq = (x.J - y.J).squaredNorm() + spd_log_distance_sq(x.R, y.R) +
                    spd_log_distance_sq(x.Q, y.Q) + (x.B - y.B).squaredNorm() +
                    (x.C - y.C).squaredNorm();
  return std::sqrt(sq);
}

TangentVector transport(const ReducedPoint& x, const ReducedPoint& y, const TangentVector& xi) {
  require_same_shape(x, xi, "transport");
  const Matrix er = spd_transport_factor(x.R, y.R);
  const Matrix eq = spd_transport_factor(x.Q, y.Q);
  return {xi.dJ, linalg::symmetrize(er * xi.dR * er.transpose()),
          linalg::symmetrize(eq * xi.dQ * eq.transpose()), xi.dB, xi.dC};
}

ReducedPoint init_factorize(const Matrix& a0, const Matrix& b0, const Matrix& c0) {
  if (a0.rows() != a0.cols() || b0.rows() != a0.rows() || c0.cols() != a0.rows()) {
    throw ValidationError("init_factorize: inconsistent shapes");
  }
  const Index r = a0.rows();
  const double abscissa = linalg::spectral_abscissa(a0);
  if (!(abscissa < 0.0)) {
    throw UnstableSystemError("init_factorize: initial A_r is not stable", abscissa);
  }
  const Matrix q = linalg::solve_lyapunov(a0, Matrix::Identity(r, r)).X;
  const Matrix q_inv = linalg::mat_inv_spd(q);
  const Matrix aq = a0 * q_inv;
  ReducedPoint x;
  x.J = 0.5 * (aq - aq.transpose());
  x.R = linalg::symmetrize(-0.5 * (aq + aq.transpose()));
  x.Q = q;
  x.B = b0;
  x.C = c0;
  x.validate();
  return x;
}

}  // namespace posred
