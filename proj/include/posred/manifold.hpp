#pragma once

// Geometry of M_r = Skew(r) x SPD(r) x SPD(r) x R^{r x m} x R^{p x r}.
// A point (J, R, Q, B_r, C_r) represents the reduced system
// ((J - R) Q, B_r, C_r), which is stable for every point of the manifold.
// The SPD factors carry the affine-invariant metric tr(P^-1 xi P^-1 eta);
// the remaining factors are Euclidean.

#include "posred/lti.hpp"

namespace posred {

struct ReducedPoint {
  Matrix J;  // skew-symmetric
  Matrix R;  // SPD
  Matrix Q;  // SPD
  Matrix B;  // r x m
  Matrix C;  // p x r

  Index order() const { return J.rows(); }
  Matrix system_matrix() const { return (J - R) * Q; }
  StateSpaceSystem system() const { return {system_matrix(), B, C}; }

  // Throws ValidationError when shapes disagree, J is not skew within
  // 1e-12 ||J||, or R / Q fail the SPD test (min eigenvalue > 1e-12 ||.||).
  void validate() const;
  bool valid() const noexcept;
};

struct TangentVector {
  Matrix dJ;  // skew
  Matrix dR;  // symmetric
  Matrix dQ;  // symmetric
  Matrix dB;
  Matrix dC;

  static TangentVector zeros_like(const ReducedPoint& x);

  TangentVector& operator+=(const TangentVector& o);
  TangentVector& operator-=(const TangentVector& o);
  TangentVector& operator*=(double s);
};

TangentVector operator+(TangentVector a, const TangentVector& b);
TangentVector operator-(TangentVector a, const TangentVector& b);
TangentVector operator*(double s, TangentVector a);
TangentVector operator-(TangentVector a);

// Euclidean gradients with respect to the ambient matrices of each factor.
struct EuclideanGradient {
  Matrix gJ, gR, gQ, gB, gC;
};

// Orthogonal projection of arbitrary ambient matrices onto T_x M_r
// (skew part for J, symmetric part for R and Q).
TangentVector project_tangent(const EuclideanGradient& ambient);

double inner(const ReducedPoint& x, const TangentVector& xi, const TangentVector& eta);
double norm(const ReducedPoint& x, const TangentVector& xi);

// sum over factors of tr(eg_b^T xi_b): the directional derivative of the
// ambient function along xi.
double euclidean_pairing(const EuclideanGradient& eg, const TangentVector& xi);

// Skew projection on J; P sym(eg) P on the SPD factors; identity elsewhere.
TangentVector egrad_to_rgrad(const ReducedPoint& x, const EuclideanGradient& eg);

// Exponential map on the SPD factors, R' = R exp(step R^-1 dR), additive on the
// linear factors.
ReducedPoint retract(const ReducedPoint& x, const TangentVector& xi, double step);

// Geodesic distance for the product metric.
double distance(const ReducedPoint& x, const ReducedPoint& y);

// Parallel transport along the SPD geodesics, (R'R^-1)^{1/2} dR (R^-1 R')^{1/2};
// identity on the linear factors.
TangentVector transport(const ReducedPoint& x, const ReducedPoint& y, const TangentVector& xi);

// Factorizes a stable A0 = (J - R) Q with Q from A0^T Q + Q A0 = -I,
// J = (A0 Q^-1 - Q^-1 A0^T) / 2 and R = -(A0 Q^-1 + Q^-1 A0^T) / 2 = Q^-2 / 2.
ReducedPoint init_factorize(const Matrix& a0, const Matrix& b0, const Matrix& c0);

}  // namespace posred
