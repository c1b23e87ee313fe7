#include "gamc/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gamc/errors.hpp"

namespace gamc::numkit {

namespace {

// Pivots at or below this fraction of the largest diagonal entry are treated
// as loss of positive definiteness.
constexpr double kPivotTolerance = 1e-12;

// Below this |alpha * lambda| the SoftAbs map is replaced by its limit 1/alpha.
constexpr double kCothGuard = 1e-8;

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch(std::string(what) + ": matrix is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()));
  }
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw NonFiniteInput(std::string(what) + ": non-finite entry");
}

}  // namespace

PosDefFactor::PosDefFactor(Matrix lower) : lower_(std::move(lower)) {
  require_square(lower_, "PosDefFactor");
  for (Eigen::Index i = 0; i < lower_.rows(); ++i) {
    if (!(lower_(i, i) > 0.0)) throw NotPositiveDefinite("PosDefFactor: non-positive diagonal");
  }
  lower_.triangularView<Eigen::StrictlyUpper>().setZero();
}

SymMatrix PosDefFactor::reconstruct() const {
  const Matrix r = lower_ * lower_.transpose();
  return 0.5 * (r + r.transpose());
}

double PosDefFactor::log_det() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < lower_.rows(); ++i) s += std::log(lower_(i, i));
  return 2.0 * s;
}

Vector PosDefFactor::apply(const Vector& z) const {
  if (z.size() != lower_.rows()) throw DimensionMismatch("PosDefFactor::apply");
  return lower_.triangularView<Eigen::Lower>() * z;
}

Vector PosDefFactor::solve_lower(const Vector& b) const {
  if (b.size() != lower_.rows()) throw DimensionMismatch("PosDefFactor::solve_lower");
  const auto n = lower_.rows();
  Vector x = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = x(i);
    for (Eigen::Index j = 0; j < i; ++j) s -= lower_(i, j) * x(j);
    x(i) = s / lower_(i, i);
  }
  return x;
}

Vector PosDefFactor::solve_upper(const Vector& b) const {
  if (b.size() != lower_.rows()) throw DimensionMismatch("PosDefFactor::solve_upper");
  const auto n = lower_.rows();
  Vector x = b;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = x(i);
    for (Eigen::Index j = i + 1; j < n; ++j) s -= lower_(j, i) * x(j);
    x(i) = s / lower_(i, i);
  }
  return x;
}

PosDefFactor PosDefFactor::scaled(double c) const {
  if (!(c > 0.0)) throw NotPositiveDefinite("PosDefFactor::scaled: scale must be positive");
  return PosDefFactor(lower_ * c);
}

PosDefFactor cholesky(const SymMatrix& a) {
  require_square(a, "cholesky");
  require_finite(a, "cholesky");
  const auto n = a.rows();
  if (n == 0) throw DimensionMismatch("cholesky: empty matrix");
  const double max_diag = a.diagonal().maxCoeff();
  const double threshold = kPivotTolerance * std::max(max_diag, 0.0);

  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > threshold)) {
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " = " +
                                std::to_string(pivot));
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return PosDefFactor(std::move(l));
}

PosDefFactor rank_one_update(const PosDefFactor& f, const Vector& v, int sign) {
  if (sign != 1 && sign != -1) throw Error("rank_one_update: sign must be +1 or -1");
  const auto n = static_cast<Eigen::Index>(f.dim());
  if (v.size() != n) throw DimensionMismatch("rank_one_update");
  if (!v.allFinite()) throw NonFiniteInput("rank_one_update: non-finite vector");

  Matrix l = f.lower();
  Vector x = v;
  const double s = static_cast<double>(sign);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = l(k, k);
    const double r2 = lkk * lkk + s * x(k) * x(k);
    if (!(r2 > kPivotTolerance * lkk * lkk)) {
      throw DowndateBreaksPositivity("rank_one_update: pivot " + std::to_string(k) +
                                     " would become non-positive");
    }
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double sn = x(k) / lkk;
    l(k, k) = r;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      l(i, k) = (l(i, k) + s * sn * x(i)) / c;
      x(i) = c * x(i) - sn * l(i, k);
    }
  }
  return PosDefFactor(std::move(l));
}

Vector chol_solve(const PosDefFactor& f, const Vector& b) {
  if (b.size() != static_cast<Eigen::Index>(f.dim())) throw DimensionMismatch("chol_solve");
  return f.solve_upper(f.solve_lower(b));
}

SymMatrix invert_spd(const SymMatrix& a) {
  const PosDefFactor f = cholesky(a);
  const auto n = a.rows();
  SymMatrix inv(n, n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e.setZero();
    e(j) = 1.0;
    inv.col(j) = chol_solve(f, e);
  }
  return 0.5 * (inv + inv.transpose());
}

double softabs_value(double lambda, double alpha) {
  const double x = alpha * lambda;
  if (std::abs(x) < kCothGuard) return 1.0 / alpha;
  return lambda / std::tanh(x);
}

double softabs_slope(double lambda, double alpha) {
  const double x = alpha * lambda;
  if (std::abs(x) < 1e-4) return 2.0 * x / 3.0;
  const double sh = std::sinh(x);
  // x / sinh^2 x underflows to 0 for large |x|, which is the correct limit.
  const double correction = std::isfinite(sh) ? x / (sh * sh) : 0.0;
  return 1.0 / std::tanh(x) - correction;
}

SymMatrix softabs_metric(const SymMatrix& h, double alpha) {
  require_square(h, "softabs_metric");
  require_finite(h, "softabs_metric");
  if (!(alpha > 0.0)) throw Error("softabs_metric: alpha must be positive");
  const SymMatrix hs = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hs);
  if (eig.info() != Eigen::Success) throw NonFiniteInput("softabs_metric: eigensolver failed");
  const Vector& lam = eig.eigenvalues();
  Vector mapped(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) mapped(i) = softabs_value(lam(i), alpha);
  const Matrix& q = eig.eigenvectors();
  SymMatrix out = q * mapped.asDiagonal() * q.transpose();
  return 0.5 * (out + out.transpose());
}

SymMatrix softabs_derivative(const SymMatrix& h, const SymMatrix& dh, double alpha) {
  require_square(h, "softabs_derivative");
  if (dh.rows() != h.rows() || dh.cols() != h.cols()) throw DimensionMismatch("softabs_derivative");
  require_finite(h, "softabs_derivative");
  require_finite(dh, "softabs_derivative");
  const SymMatrix hs = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hs);
  if (eig.info() != Eigen::Success) throw NonFiniteInput("softabs_derivative: eigensolver failed");
  const Vector& lam = eig.eigenvalues();
  const Matrix& q = eig.eigenvectors();
  const auto n = lam.size();
  const double scale = 1.0 + lam.cwiseAbs().maxCoeff();

  Matrix e = q.transpose() * (0.5 * (dh + dh.transpose())) * q;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gap = lam(i) - lam(j);
      double w;
      if (std::abs(gap) > 1e-10 * scale) {
        w = (softabs_value(lam(i), alpha) - softabs_value(lam(j), alpha)) / gap;
      } else {
        w = softabs_slope(0.5 * (lam(i) + lam(j)), alpha);
      }
      e(i, j) *= w;
    }
  }
  SymMatrix out = q * e * q.transpose();
  return 0.5 * (out + out.transpose());
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace gamc::numkit
