#include "gamc/autodiff.hpp"

namespace gamc::ad {

namespace {

double checked(const ScalarField& f, const Vector& x) {
  const double v = f(x);
  if (!std::isfinite(v)) throw NonFiniteValue("finite difference: function value is not finite");
  return v;
}

}  // namespace

Vector fd_gradient(const ScalarField& f, const Vector& x, double step) {
  const auto n = x.size();
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = relative_step(step, x(i));
    Vector xp = x;
    Vector xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (checked(f, xp) - checked(f, xm)) / (xp(i) - xm(i));
  }
  return g;
}

SymMatrix fd_hessian(const ScalarField& f, const Vector& x, double step) {
  const auto n = x.size();
  SymMatrix hm(n, n);
  const double f0 = checked(f, x);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = relative_step(step, x(i));
    Vector xp = x;
    Vector xm = x;
    xp(i) += hi;
    xm(i) -= hi;
    hm(i, i) = (checked(f, xp) - 2.0 * f0 + checked(f, xm)) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double hj = relative_step(step, x(j));
      Vector pp = x, pm = x, mp = x, mm = x;
      pp(i) += hi; pp(j) += hj;
      pm(i) += hi; pm(j) -= hj;
      mp(i) -= hi; mp(j) += hj;
      mm(i) -= hi; mm(j) -= hj;
      const double v = (checked(f, pp) - checked(f, pm) - checked(f, mp) + checked(f, mm)) / (4.0 * hi * hj);
      hm(i, j) = v;
      hm(j, i) = v;
    }
  }
  return hm;
}

Matrix fd_jacobian(const VectorField& g, const Vector& x, double step) {
  const auto n = x.size();
  Matrix jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = relative_step(step, x(j));
    Vector xp = x;
    Vector xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Vector gp = g(xp);
    const Vector gm = g(xm);
    if (!gp.allFinite() || !gm.allFinite()) throw NonFiniteValue("fd_jacobian: non-finite value");
    if (jac.size() == 0) jac = Matrix::Zero(gp.size(), n);
    jac.col(j) = (gp - gm) / (xp(j) - xm(j));
  }
  return jac;
}

}  // namespace gamc::ad
