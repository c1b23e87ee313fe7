#pragma once

// Forward-mode automatic differentiation.
//
// Dual<T> carries a value and one partial per differentiation direction.
// Nesting (Dual<Dual<double>>) gives exact second derivatives. An empty
// partials vector stands for a constant, so literals never allocate.

#include <cmath>
#include <cstddef>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

#include "gamc/errors.hpp"
#include "gamc/numkit.hpp"

namespace gamc::ad {

template <class T>
struct Dual {
  T val{};
  std::vector<T> d;

  Dual() = default;
  Dual(double v) : val(v) {}  // NOLINT(google-explicit-constructor)
  template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
  Dual(const U& v) : val(v) {}  // NOLINT(google-explicit-constructor)
  Dual(T v, std::vector<T> partials) : val(std::move(v)), d(std::move(partials)) {}

  bool is_constant() const { return d.empty(); }
  std::size_t size() const { return d.size(); }

  /// Seeds the i-th of n directions with unit tangent.
  static Dual variable(T v, std::size_t i, std::size_t n) {
    std::vector<T> p(n, T(0.0));
    p[i] = T(1.0);
    return Dual(std::move(v), std::move(p));
  }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.val);
}

inline bool all_finite(double x) { return std::isfinite(x); }
template <class T>
bool all_finite(const Dual<T>& x) {
  if (!all_finite(x.val)) return false;
  for (const auto& p : x.d) {
    if (!all_finite(p)) return false;
  }
  return true;
}

namespace detail {

// r.d[i] = ca * a.d[i] + cb * b.d[i], treating empty partials as zeros.
template <class T, class CA, class CB>
std::vector<T> combine(const Dual<T>& a, const CA& ca, const Dual<T>& b, const CB& cb) {
  if (a.d.empty() && b.d.empty()) return {};
  if (b.d.empty()) {
    std::vector<T> r(a.d.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = ca * a.d[i];
    return r;
  }
  if (a.d.empty()) {
    std::vector<T> r(b.d.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = cb * b.d[i];
    return r;
  }
  if (a.d.size() != b.d.size()) throw DimensionMismatch("Dual: partials length differs");
  std::vector<T> r(a.d.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ca * a.d[i] + cb * b.d[i];
  return r;
}

template <class T, class C>
std::vector<T> scale(const Dual<T>& a, const C& c) {
  std::vector<T> r(a.d.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = c * a.d[i];
  return r;
}

// Chain rule for a unary function with value fv and derivative dfv at a.val.
template <class T>
Dual<T> unary(const Dual<T>& a, T fv, const T& dfv) {
  return Dual<T>(std::move(fv), scale(a, dfv));
}

}  // namespace detail

// Arithmetic ------------------------------------------------------------------

template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return Dual<T>(-a.val, detail::scale(a, -1.0));
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  if (a.d.empty()) return Dual<T>(a.val + b.val, b.d);
  if (b.d.empty()) return Dual<T>(a.val + b.val, a.d);
  return Dual<T>(a.val + b.val, detail::combine(a, 1.0, b, 1.0));
}
template <class T>
Dual<T> operator+(Dual<T>&& a, const Dual<T>& b) {
  a.val = a.val + b.val;
  if (a.d.empty()) {
    a.d = b.d;
  } else if (!b.d.empty()) {
    if (a.d.size() != b.d.size()) throw DimensionMismatch("Dual: partials length differs");
    for (std::size_t i = 0; i < a.d.size(); ++i) a.d[i] = a.d[i] + b.d[i];
  }
  return std::move(a);
}
template <class T>
Dual<T> operator+(const Dual<T>& a, double b) {
  return Dual<T>(a.val + b, a.d);
}
template <class T>
Dual<T> operator+(Dual<T>&& a, double b) {
  a.val = a.val + b;
  return std::move(a);
}
template <class T>
Dual<T> operator+(double a, const Dual<T>& b) {
  return Dual<T>(a + b.val, b.d);
}

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  if (b.d.empty()) return Dual<T>(a.val - b.val, a.d);
  return Dual<T>(a.val - b.val, detail::combine(a, 1.0, b, -1.0));
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double b) {
  return Dual<T>(a.val - b, a.d);
}
template <class T>
Dual<T> operator-(Dual<T>&& a, double b) {
  a.val = a.val - b;
  return std::move(a);
}
template <class T>
Dual<T> operator-(double a, const Dual<T>& b) {
  return Dual<T>(a - b.val, detail::scale(b, -1.0));
}

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return Dual<T>(a.val * b.val, detail::combine(a, b.val, b, a.val));
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double b) {
  return Dual<T>(a.val * b, detail::scale(a, b));
}
template <class T>
Dual<T> operator*(double a, const Dual<T>& b) {
  return b * a;
}

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T q = a.val / b.val;
  const T inv = 1.0 / b.val;
  return Dual<T>(q, detail::combine(a, inv, b, -(q * inv)));
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double b) {
  return Dual<T>(a.val / b, detail::scale(a, 1.0 / b));
}
template <class T>
Dual<T> operator/(double a, const Dual<T>& b) {
  const T q = a / b.val;
  return Dual<T>(q, detail::scale(b, -(q / b.val)));
}

template <class T, class U>
Dual<T>& operator+=(Dual<T>& a, const U& b) {
  a = std::move(a) + b;
  return a;
}
template <class T, class U>
Dual<T>& operator-=(Dual<T>& a, const U& b) {
  a = a - b;
  return a;
}
template <class T, class U>
Dual<T>& operator*=(Dual<T>& a, const U& b) {
  a = a * b;
  return a;
}
template <class T, class U>
Dual<T>& operator/=(Dual<T>& a, const U& b) {
  a = a / b;
  return a;
}

/// a += c * b without temporaries; c is a plain coefficient.
inline void add_scaled(double& a, const double& b, double c) { a += c * b; }
template <class T>
void add_scaled(Dual<T>& a, const Dual<T>& b, double c) {
  add_scaled(a.val, b.val, c);
  if (b.d.empty()) return;
  if (a.d.empty()) a.d.assign(b.d.size(), T(0.0));
  if (a.d.size() != b.d.size()) throw DimensionMismatch("Dual: partials length differs");
  for (std::size_t i = 0; i < a.d.size(); ++i) add_scaled(a.d[i], b.d[i], c);
}

// Comparisons act on values only.
template <class T>
bool operator<(const Dual<T>& a, const Dual<T>& b) {
  return value_of(a) < value_of(b);
}
template <class T>
bool operator<(const Dual<T>& a, double b) {
  return value_of(a) < b;
}
template <class T>
bool operator>(const Dual<T>& a, double b) {
  return value_of(a) > b;
}

// Elementary functions -------------------------------------------------------

using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::log1p;
using std::sin;
using std::sqrt;
using std::tanh;

template <class T>
Dual<T> sin(const Dual<T>& a) {
  return detail::unary(a, sin(a.val), cos(a.val));
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  return detail::unary(a, cos(a.val), -sin(a.val));
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.val);
  return Dual<T>(e, detail::scale(a, e));
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  return detail::unary(a, log(a.val), 1.0 / a.val);
}
template <class T>
Dual<T> log1p(const Dual<T>& a) {
  return detail::unary(a, log1p(a.val), 1.0 / (1.0 + a.val));
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  T s = sqrt(a.val);
  return Dual<T>(s, detail::scale(a, 0.5 / s));
}
template <class T>
Dual<T> tanh(const Dual<T>& a) {
  T t = tanh(a.val);
  return Dual<T>(t, detail::scale(a, 1.0 - t * t));
}
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  const T r2 = x.val * x.val + y.val * y.val;
  return Dual<T>(atan2(y.val, x.val), detail::combine(y, x.val / r2, x, -(y.val / r2)));
}

inline double square(double x) { return x * x; }
template <class T>
Dual<T> square(const Dual<T>& a) {
  return a * a;
}

// Differentiation drivers -----------------------------------------------------

using D1 = Dual<double>;
using D2 = Dual<Dual<double>>;

struct ValueGradientHessian {
  double value = 0.0;
  Vector gradient;
  /// As produced by the nested evaluation, before symmetrization.
  Matrix raw_hessian;
  SymMatrix hessian;
};

namespace detail {

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteValue(what);
}

}  // namespace detail

/// Value and gradient of f at x. f must be callable with
/// const std::vector<Dual<double>>& and return Dual<double>.
template <class F>
std::pair<double, Vector> value_and_gradient(F&& f, const Vector& x) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  std::vector<D1> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) xs.push_back(D1::variable(x(static_cast<Eigen::Index>(i)), i, n));
  const D1 r = f(xs);
  detail::check_finite(r.val, "gradient: function value is not finite");
  Vector g = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < r.d.size(); ++i) g(static_cast<Eigen::Index>(i)) = r.d[i];
  if (!g.allFinite()) throw NonFiniteValue("gradient: partial derivative is not finite");
  return {r.val, std::move(g)};
}

template <class F>
Vector gradient(F&& f, const Vector& x) {
  return value_and_gradient(std::forward<F>(f), x).second;
}

/// Value, gradient and Hessian via forward-over-forward duals. f must be
/// callable with const std::vector<Dual<Dual<double>>>&.
template <class F>
ValueGradientHessian value_gradient_hessian(F&& f, const Vector& x) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  std::vector<D2> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    D1 inner = D1::variable(x(static_cast<Eigen::Index>(i)), i, n);
    std::vector<D1> outer(n, D1(0.0));
    outer[i] = D1(1.0);
    xs.emplace_back(std::move(inner), std::move(outer));
  }
  const D2 r = f(xs);
  ValueGradientHessian out;
  out.value = r.val.val;
  detail::check_finite(out.value, "hessian: function value is not finite");
  const auto ni = static_cast<Eigen::Index>(n);
  out.gradient = Vector::Zero(ni);
  for (std::size_t i = 0; i < r.val.d.size(); ++i) out.gradient(static_cast<Eigen::Index>(i)) = r.val.d[i];
  out.raw_hessian = Matrix::Zero(ni, ni);
  for (std::size_t j = 0; j < r.d.size(); ++j) {
    for (std::size_t i = 0; i < r.d[j].d.size(); ++i) {
      out.raw_hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = r.d[j].d[i];
    }
  }
  if (!out.gradient.allFinite() || !out.raw_hessian.allFinite()) {
    throw NonFiniteValue("hessian: derivative is not finite");
  }
  out.hessian = 0.5 * (out.raw_hessian + out.raw_hessian.transpose());
  return out;
}

template <class F>
SymMatrix hessian(F&& f, const Vector& x) {
  return value_gradient_hessian(std::forward<F>(f), x).hessian;
}

/// Central-difference step used for dimension j.
inline double relative_step(double step, double xj) { return step * (1.0 + std::abs(xj)); }

/// Slices d(-Hessian)/dx_j by central differences of the dual-number Hessian.
template <class F>
std::vector<SymMatrix> metric_derivatives(F&& f, const Vector& x, double step = 1e-4) {
  const auto n = x.size();
  std::vector<SymMatrix> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = relative_step(step, x(j));
    Vector xp = x;
    Vector xm = x;
    xp(j) += h;
    xm(j) -= h;
    const SymMatrix hp = hessian(f, xp);
    const SymMatrix hm = hessian(f, xm);
    slices.push_back(-(hp - hm) / (xp(j) - xm(j)));
  }
  return slices;
}

// Finite-difference oracles on plain double functions --------------------------

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

/// Central differences with step h_i = step * (1 + |x_i|).
Vector fd_gradient(const ScalarField& f, const Vector& x, double step = 1e-5);
/// Central second differences of f with the same step rule.
SymMatrix fd_hessian(const ScalarField& f, const Vector& x, double step = 1e-4);
/// Central differences of a vector field; column j holds d g / d x_j.
Matrix fd_jacobian(const VectorField& g, const Vector& x, double step = 1e-5);

}  // namespace gamc::ad
