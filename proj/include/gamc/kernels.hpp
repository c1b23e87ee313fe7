#pragma once

// Proposal kernels and Metropolis-Hastings bookkeeping.
//
// Langevin proposals share the form N(theta + eps^2/2 M^{-1} grad + eps^2 gamma,
// eps^2 M^{-1}); MALA fixes M, SMMALA takes M(theta) from the regularized
// negative Hessian and MMALA adds the curvature term gamma. The adaptive
// Metropolis kernel is the two-component mixture
//   (1 - lambda) N(current, beta S) + lambda N(current, gamma_fixed I)
// with S the running empirical covariance of the absorbed history.

#include <cstddef>
#include <optional>
#include <vector>

#include "gamc/numkit.hpp"
#include "gamc/random.hpp"
#include "gamc/targets.hpp"

namespace gamc::kernels {

struct GaussianProposal {
  Vector mean;
  numkit::PosDefFactor cov_factor;
};

/// Normalized log N(x | mean, cov) using the cached factor.
double gaussian_logpdf(const GaussianProposal& prop, const Vector& x);
/// mean + L z with z ~ N(0, I).
Vector gaussian_sample(const GaussianProposal& prop, Rng& rng);

enum class LangevinVariant { mala, smmala, mmala };

struct MetricOptions {
  bool softabs = true;
  double alpha = numkit::kDefaultSoftAbsAlpha;
};

struct LangevinKernelSpec {
  LangevinVariant variant = LangevinVariant::smmala;
  double epsilon = 1.0;
  /// Constant metric for MALA; identity when absent.
  std::optional<SymMatrix> precond;
  MetricOptions metric;
};

/// Constant MALA metric with its inverse and the factor of the inverse,
/// computed once.
struct Preconditioner {
  SymMatrix metric;
  SymMatrix inverse;
  numkit::PosDefFactor inverse_factor;

  explicit Preconditioner(const SymMatrix& m);
  static Preconditioner identity(std::size_t n);
};

/// Position-dependent metric at one point.
struct LocalGeometry {
  SymMatrix metric;
  numkit::PosDefFactor metric_factor;
  SymMatrix inverse;
  /// Lower factor of the inverse, built without inverting M so that it stays
  /// positive definite when M is badly conditioned.
  numkit::PosDefFactor inverse_factor;
};

/// M(theta) = softabs(-hessian) (or -hessian when SoftAbs is off) with its
/// factor and inverse. Throws MetricFailure if M is not positive definite.
LocalGeometry local_geometry(const DerivativeBundle& bundle, const MetricOptions& options);

GaussianProposal mala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                               const Preconditioner& precond);

GaussianProposal smmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                 const LocalGeometry& geometry);
GaussianProposal smmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                 const MetricOptions& options);

GaussianProposal mmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                const LocalGeometry& geometry, const MetricOptions& options);
GaussianProposal mmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                const MetricOptions& options);

/// dM/dtheta_j for the metric actually used: the bundle's d(-H)/dtheta_j,
/// pushed through the SoftAbs map when it is enabled.
std::vector<SymMatrix> metric_slices(const DerivativeBundle& bundle, const MetricOptions& options);

/// gamma_i = -1/2 sum_{j,h,l} Minv_ih dM_hl/dtheta_j Minv_lj
Vector mmala_gamma(const SymMatrix& metric_inverse, const std::vector<SymMatrix>& metric_slices);

/// Langevin kernel of a fixed variant; the step size is the only mutable
/// hyperparameter.
class LangevinKernel {
 public:
  LangevinKernel(LangevinKernelSpec spec, std::size_t dim);

  LangevinVariant variant() const { return spec_.variant; }
  const LangevinKernelSpec& spec() const { return spec_; }
  double epsilon() const { return spec_.epsilon; }
  void set_epsilon(double eps);
  DerivativeOrder required_order() const;
  bool position_dependent() const { return spec_.variant != LangevinVariant::mala; }

  /// Geometry for SMMALA/MMALA; throws MetricFailure.
  LocalGeometry geometry(const DerivativeBundle& bundle) const;
  /// geometry must be supplied for position-dependent variants.
  GaussianProposal propose(const Vector& theta, const DerivativeBundle& bundle,
                           const LocalGeometry* geometry) const;

 private:
  LangevinKernelSpec spec_;
  std::optional<Preconditioner> precond_;
};

/// log min(1, p(prop) q_rev / (p(cur) q_fwd)); -inf when the proposal has
/// zero density.
double mh_accept_log_ratio(double logp_cur, double logp_prop, double logq_fwd, double logq_rev);

// Adaptive Metropolis -------------------------------------------------------------

struct AMConfig {
  double beta = 1.0;
  double lambda = 0.01;
  double gamma_fixed = 0.001;
  /// Refactor S from scratch every update instead of rank-one modifications.
  bool force_refactorization = false;
  /// Number of history points the seed covariance stands in for. With 1 the
  /// seed is replaced by the empirical covariance at the first update.
  std::size_t seed_weight = 1;
};

struct AMState {
  std::size_t count = 0;  // points absorbed
  Vector mean;
  SymMatrix cov;
  double beta = 1.0;
  double lambda = 0.01;
  double gamma_fixed = 0.001;
  bool force_refactorization = false;
  /// Factor of cov while it is positive definite.
  std::optional<numkit::PosDefFactor> cov_factor;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  bool adaptive_available() const { return cov_factor.has_value(); }
};

AMState am_init(const Vector& theta0, const SymMatrix& seed_cov, const AMConfig& cfg);
/// Same, with a known factor of the seed covariance.
AMState am_init(const Vector& theta0, const numkit::PosDefFactor& seed_factor, const AMConfig& cfg);

/// Absorbs one more chain state:
///   (k+1) mean_k = k mean_{k-1} + theta_k
///   k S_k = (k-1) S_{k-1} + theta_k theta_k^T - (k+1) mean_k mean_k^T + k mean_{k-1} mean_{k-1}^T
/// The factor of S follows by two rank-one updates and one downdate.
AMState am_update(AMState state, const Vector& theta_new);

double am_proposal_logpdf(const AMState& state, const Vector& current, const Vector& x);
Vector am_proposal_sample(const AMState& state, const Vector& current, Rng& rng);

/// Batch empirical covariance of a history (1/k normalization, k+1 points).
SymMatrix empirical_covariance(const std::vector<Vector>& history);

}  // namespace gamc::kernels
