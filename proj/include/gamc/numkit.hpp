#pragma once

// Dense symmetric linear algebra used by the samplers: Cholesky factors with
// rank-one modifications, triangular solves, SPD inversion and the SoftAbs
// regularization of indefinite matrices.

#include <cstddef>

#include <Eigen/Dense>

namespace gamc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Dense symmetric matrix. Only the storage type is shared with Matrix; every
/// function taking a SymMatrix assumes entries(i,j) == entries(j,i).
using SymMatrix = Eigen::MatrixXd;

namespace numkit {

inline constexpr double kDefaultSoftAbsAlpha = 1000.0;

/// Lower-triangular Cholesky factor L of an SPD matrix A = L L^T.
class PosDefFactor {
 public:
  PosDefFactor() = default;
  /// Takes ownership of a lower-triangular matrix; throws NotPositiveDefinite
  /// if a diagonal entry is not strictly positive.
  explicit PosDefFactor(Matrix lower);

  std::size_t dim() const { return static_cast<std::size_t>(lower_.rows()); }
  const Matrix& lower() const { return lower_; }

  /// L L^T
  SymMatrix reconstruct() const;
  /// log det(L L^T)
  double log_det() const;

  /// L z
  Vector apply(const Vector& z) const;
  /// L^{-1} b
  Vector solve_lower(const Vector& b) const;
  /// L^{-T} b
  Vector solve_upper(const Vector& b) const;

  /// Factor of c^2 A, for c > 0.
  PosDefFactor scaled(double c) const;

 private:
  Matrix lower_;
};

PosDefFactor cholesky(const SymMatrix& a);

/// Factor of f f^T + sign * v v^T in O(n^2). sign must be +1 or -1.
PosDefFactor rank_one_update(const PosDefFactor& f, const Vector& v, int sign);

/// Solves (f f^T) x = b.
Vector chol_solve(const PosDefFactor& f, const Vector& b);

SymMatrix invert_spd(const SymMatrix& a);

/// Eigenvalue map lambda -> lambda * coth(alpha * lambda). The output shares
/// the eigenvectors of h and is positive definite.
SymMatrix softabs_metric(const SymMatrix& h, double alpha = kDefaultSoftAbsAlpha);

/// Directional derivative of softabs_metric at h along the symmetric
/// direction dh (Daleckii-Krein formula).
SymMatrix softabs_derivative(const SymMatrix& h, const SymMatrix& dh,
                             double alpha = kDefaultSoftAbsAlpha);

/// Scalar SoftAbs map and its derivative.
double softabs_value(double lambda, double alpha);
double softabs_slope(double lambda, double alpha);

bool is_symmetric(const Matrix& a, double tol = 0.0);
double max_abs(const Matrix& a);

}  // namespace numkit
}  // namespace gamc
