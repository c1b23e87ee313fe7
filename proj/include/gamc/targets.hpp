#pragma once

// Log-target densities: a common interface, a Gaussian reference target,
// the correlated multivariate Student-t, and radial-velocity posteriors of
// planetary systems.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gamc/autodiff.hpp"
#include "gamc/errors.hpp"
#include "gamc/numkit.hpp"
#include "gamc/random.hpp"

namespace gamc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class DerivativeOrder { value = 0, gradient = 1, hessian = 2, metric_derivatives = 3 };

/// Log-density and derivatives at one point. hessian is d^2 log p, the metric
/// used by the samplers is built from its negation. metric_derivs[j] holds
/// d(-hessian)/dx_j.
struct DerivativeBundle {
  DerivativeOrder order = DerivativeOrder::value;
  double value = kNegInf;
  Vector gradient;
  std::optional<SymMatrix> hessian;
  std::optional<std::vector<SymMatrix>> metric_derivs;
};

class LogTarget {
 public:
  virtual ~LogTarget() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual bool in_support(const Vector& x) const = 0;
  /// Unnormalized log-density, -inf outside the support.
  virtual double log_density(const Vector& x) const = 0;
  /// Throws TargetError outside the support.
  virtual DerivativeBundle derivatives(const Vector& x, DerivativeOrder order) const = 0;
};

/// Implements derivatives() by forward-mode AD over Derived::evaluate<T>.
/// Derived provides dim(), in_support() and
///   template <class T> T evaluate(const std::vector<T>& x) const;
template <class Derived>
class AutodiffTarget : public LogTarget {
 public:
  double log_density(const Vector& x) const override {
    if (static_cast<std::size_t>(x.size()) != this->dim()) throw DimensionMismatch(this->name() + ": dimension");
    if (!this->in_support(x)) return kNegInf;
    std::vector<double> xs(x.data(), x.data() + x.size());
    return self().evaluate(xs);
  }

  DerivativeBundle derivatives(const Vector& x, DerivativeOrder order) const override {
    if (static_cast<std::size_t>(x.size()) != this->dim()) throw DimensionMismatch(this->name() + ": dimension");
    if (!this->in_support(x)) throw TargetError(this->name() + ": derivatives requested outside support");
    const auto f = [this](const auto& v) { return self().evaluate(v); };
    DerivativeBundle b;
    b.order = order;
    switch (order) {
      case DerivativeOrder::value:
        b.value = log_density(x);
        break;
      case DerivativeOrder::gradient: {
        auto [v, g] = ad::value_and_gradient(f, x);
        b.value = v;
        b.gradient = std::move(g);
        break;
      }
      case DerivativeOrder::hessian:
      case DerivativeOrder::metric_derivatives: {
        auto vgh = ad::value_gradient_hessian(f, x);
        b.value = vgh.value;
        b.gradient = std::move(vgh.gradient);
        b.hessian = std::move(vgh.hessian);
        if (order == DerivativeOrder::metric_derivatives) b.metric_derivs = ad::metric_derivatives(f, x);
        break;
      }
    }
    return b;
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

namespace targets {

/// Zero-mean Gaussian with precision matrix A: log p = -x^T A x / 2.
class GaussianTarget : public AutodiffTarget<GaussianTarget> {
 public:
  explicit GaussianTarget(SymMatrix precision);
  static GaussianTarget standard(std::size_t n);

  std::size_t dim() const override { return static_cast<std::size_t>(precision_.rows()); }
  std::string name() const override { return "gaussian"; }
  bool in_support(const Vector& x) const override { return x.allFinite(); }
  const SymMatrix& precision() const { return precision_; }

  template <class T>
  T evaluate(const std::vector<T>& x) const {
    const std::size_t n = x.size();
    T q(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      T row(0.0);
      for (std::size_t j = 0; j < n; ++j) {
        ad::add_scaled(row, x[j], precision_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
      q += x[i] * row;
    }
    return -0.5 * q;
  }

 private:
  SymMatrix precision_;
};

/// Sigma(xi)[i][j] = xi^|i-j|.
SymMatrix geometric_correlation(std::size_t n, double xi);

/// n-dimensional t_nu(0, (nu-2)/nu * Sigma(xi)); covariance equals Sigma(xi).
class StudentTTarget : public AutodiffTarget<StudentTTarget> {
 public:
  StudentTTarget(std::size_t n, double dof, double xi);

  std::size_t dim() const override { return n_; }
  std::string name() const override { return "student_t"; }
  bool in_support(const Vector& x) const override { return x.allFinite(); }

  double dof() const { return dof_; }
  double xi() const { return xi_; }
  const SymMatrix& correlation() const { return correlation_; }
  const SymMatrix& scale_matrix() const { return scale_; }
  const numkit::PosDefFactor& scale_factor() const { return scale_factor_; }
  const SymMatrix& scale_inverse() const { return scale_inverse_; }

  /// Closed-form gradient of the unnormalized log-density.
  Vector analytic_gradient(const Vector& x) const;

  template <class T>
  T evaluate(const std::vector<T>& x) const {
    const std::size_t n = x.size();
    T q(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      T row(0.0);
      for (std::size_t j = 0; j < n; ++j) {
        ad::add_scaled(row, x[j], scale_inverse_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
      q += x[i] * row;
    }
    using std::log1p;
    return -0.5 * (dof_ + static_cast<double>(n)) * log1p(q / dof_);
  }

 private:
  std::size_t n_;
  double dof_;
  double xi_;
  SymMatrix correlation_;
  SymMatrix scale_;
  numkit::PosDefFactor scale_factor_;
  SymMatrix scale_inverse_;
};

double student_t_log_density(const StudentTTarget& target, const Vector& x);
Vector student_t_analytic_gradient(const StudentTTarget& target, const Vector& x);

// Orbits ----------------------------------------------------------------------

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Eccentric anomaly E solving M = E - e sin E. The returned E satisfies the
/// equation for the given (unreduced) M.
double solve_kepler(double mean_anomaly, double eccentricity);

/// Eccentric anomaly for AD scalar types: solved in double precision, then
/// refined by two Newton steps in T so derivatives up to third order follow
/// the implicit function theorem.
template <class T>
T eccentric_anomaly(const T& mean_anomaly, const T& eccentricity) {
  const double e0 = solve_kepler(ad::value_of(mean_anomaly), ad::value_of(eccentricity));
  if constexpr (std::is_same_v<T, double>) {
    return e0;
  } else {
    using std::cos;
    using std::sin;
    T e(e0);
    for (int step = 0; step < 2; ++step) {
      const T f = e - eccentricity * sin(e) - mean_anomaly;
      const T fp = 1.0 - eccentricity * cos(e);
      e = e - f / fp;
    }
    return e;
  }
}

/// T = 2 atan2(sqrt(1+e) sin(E/2), sqrt(1-e) cos(E/2)).
template <class T>
T true_anomaly(const T& eccentric, const T& eccentricity) {
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T half = eccentric * 0.5;
  return 2.0 * atan2(sqrt(1.0 + eccentricity) * sin(half), sqrt(1.0 - eccentricity) * cos(half));
}

struct Planet {
  double amplitude = 0.0;     // K, m/s
  double period = 1.0;        // P, days
  double eccentricity = 0.0;  // e
  double mean_anomaly0 = 0.0; // M0, rad
  double pericenter = 0.0;    // omega, rad
};

/// Parameter vector layout: (C, K_1, P_1, e_1, M0_1, omega_1, ..., omega_np).
struct RVParams {
  double systemic = 1.0;  // C
  std::vector<Planet> planets;

  std::size_t dim() const { return 5 * planets.size() + 1; }
  Vector to_vector() const;
  static RVParams from_vector(const Vector& theta);

  static RVParams one_planet_reference();
  static RVParams two_planet_reference();
};

struct RVModelOptions {
  /// false: v = C * sum_j(...) as printed; true: v = C + sum_j(...).
  bool c_additive = false;
};

/// Stellar line-of-sight velocity at time t for a packed parameter vector.
template <class T>
T rv_velocity(const std::vector<T>& theta, double t, const RVModelOptions& options) {
  using std::cos;
  const std::size_t np = (theta.size() - 1) / 5;
  T sum(0.0);
  for (std::size_t j = 0; j < np; ++j) {
    const T& k = theta[1 + 5 * j];
    const T& p = theta[2 + 5 * j];
    const T& e = theta[3 + 5 * j];
    const T& m0 = theta[4 + 5 * j];
    const T& w = theta[5 + 5 * j];
    const T mean = m0 + (kTwoPi * t) / p;
    const T ecc_anom = eccentric_anomaly(mean, e);
    const T nu = true_anomaly(ecc_anom, e);
    sum += k * (cos(w + nu) + e * cos(w));
  }
  return options.c_additive ? theta[0] + sum : theta[0] * sum;
}

/// Throws InvalidParams when e is outside [0,1) or K, P are not positive.
double rv_model_velocity(const RVParams& params, double t, const RVModelOptions& options = {});

struct RVDataset {
  std::vector<double> times;       // days
  std::vector<double> velocities;  // m/s
  std::vector<double> sigmas;      // m/s

  std::size_t size() const { return times.size(); }
  /// Throws InvalidParams unless sizes agree, n >= 1, values finite, sigmas > 0.
  void validate() const;
};

template <class T>
T rv_log_likelihood_t(const std::vector<T>& theta, const RVDataset& data, const RVModelOptions& options) {
  T acc(0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const T r = (rv_velocity(theta, data.times[i], options) - data.velocities[i]) / data.sigmas[i];
    acc += r * r;
  }
  return -0.5 * acc;
}

double rv_log_likelihood(const RVParams& params, const RVDataset& data, const RVModelOptions& options = {});

enum class ScalePrior { modified_jeffreys, uniform };

/// Priors on the RV parameters. Amplitudes and periods use p(x) ∝ 1/(x + x0)
/// on (0, x_max] (or uniform on the same interval); e ~ U[0,1),
/// M0, omega ~ U[0, 2pi), C ~ U[c_min, c_max].
struct RVPriorConfig {
  ScalePrior amplitude_prior = ScalePrior::modified_jeffreys;
  ScalePrior period_prior = ScalePrior::modified_jeffreys;
  double amplitude_knee = 1.0;      // K0, m/s
  double amplitude_max = 2000.0;    // m/s
  double period_knee = 1.0;         // P0, days
  double period_max = 1e4;          // days
  double systemic_min = -1000.0;    // m/s
  double systemic_max = 1000.0;     // m/s
};

bool rv_in_support(const Vector& theta, const RVPriorConfig& prior);

template <class T>
T rv_log_prior_t(const std::vector<T>& theta, const RVPriorConfig& cfg) {
  using std::log;
  const std::size_t np = (theta.size() - 1) / 5;
  T lp(-std::log(cfg.systemic_max - cfg.systemic_min));
  const auto scale_term = [](const T& x, ScalePrior kind, double knee, double xmax) -> T {
    if (kind == ScalePrior::uniform) return T(-std::log(xmax));
    return -log(x + knee) - std::log(std::log1p(xmax / knee));
  };
  for (std::size_t j = 0; j < np; ++j) {
    lp += scale_term(theta[1 + 5 * j], cfg.amplitude_prior, cfg.amplitude_knee, cfg.amplitude_max);
    lp += scale_term(theta[2 + 5 * j], cfg.period_prior, cfg.period_knee, cfg.period_max);
    lp += -2.0 * std::log(kTwoPi);
  }
  return lp;
}

/// Log prior density; -inf outside the support.
double rv_log_prior(const RVParams& params, const RVPriorConfig& cfg = {});
double rv_log_prior(const Vector& theta, const RVPriorConfig& cfg = {});

/// Posterior log-density = rv_log_likelihood + rv_log_prior.
class RVPosteriorTarget : public AutodiffTarget<RVPosteriorTarget> {
 public:
  RVPosteriorTarget(RVDataset data, std::size_t planets, RVPriorConfig prior = {},
                    RVModelOptions options = {});

  std::size_t dim() const override { return 5 * planets_ + 1; }
  std::string name() const override { return "rv"; }
  bool in_support(const Vector& x) const override { return rv_in_support(x, prior_); }

  const RVDataset& data() const { return data_; }
  const RVPriorConfig& prior() const { return prior_; }
  const RVModelOptions& options() const { return options_; }
  std::size_t planets() const { return planets_; }

  template <class T>
  T evaluate(const std::vector<T>& x) const {
    return rv_log_likelihood_t(x, data_, options_) + rv_log_prior_t(x, prior_);
  }

 private:
  RVDataset data_;
  std::size_t planets_;
  RVPriorConfig prior_;
  RVModelOptions options_;
};

/// Log-likelihood alone as a differentiable target (no prior, unbounded support
/// apart from the orbit constraints). Used for derivative checks.
class RVLikelihoodTarget : public AutodiffTarget<RVLikelihoodTarget> {
 public:
  RVLikelihoodTarget(RVDataset data, std::size_t planets, RVModelOptions options = {});
  std::size_t dim() const override { return 5 * planets_ + 1; }
  std::string name() const override { return "rv_likelihood"; }
  bool in_support(const Vector& x) const override;

  template <class T>
  T evaluate(const std::vector<T>& x) const {
    return rv_log_likelihood_t(x, data_, options_);
  }

 private:
  RVDataset data_;
  std::size_t planets_;
  RVModelOptions options_;
};

/// n_d equally spaced times covering [0, span] inclusive.
std::vector<double> uniform_times(std::size_t count, double span = 730.0);

/// velocities_i = v(t_i) + sigma_i * z_i, z_i ~ N(0,1) drawn from rng.
/// When noise is non-null it receives the injected errors sigma_i * z_i.
RVDataset simulate_rv_dataset(const RVParams& truth, const std::vector<double>& times,
                              const std::vector<double>& sigmas, Rng& rng,
                              const RVModelOptions& options = {}, std::vector<double>* noise = nullptr);

/// CSV with header t,v,sigma.
void write_rv_csv(const RVDataset& data, const std::string& path);
RVDataset read_rv_csv(const std::string& path);

}  // namespace targets
}  // namespace gamc
