#include "gamc/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gamc/errors.hpp"

namespace gamc::kernels {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void require_gradient(const DerivativeBundle& b, const Vector& theta) {
  if (b.gradient.size() != theta.size()) throw DimensionMismatch("langevin proposal: gradient missing");
  if (!b.gradient.allFinite()) throw NonFiniteGradient("langevin proposal: non-finite gradient");
}

}  // namespace

double gaussian_logpdf(const GaussianProposal& prop, const Vector& x) {
  if (x.size() != prop.mean.size()) throw DimensionMismatch("gaussian_logpdf");
  const Vector w = prop.cov_factor.solve_lower(x - prop.mean);
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * kLog2Pi + prop.cov_factor.log_det() + w.squaredNorm());
}

Vector gaussian_sample(const GaussianProposal& prop, Rng& rng) {
  return prop.mean + prop.cov_factor.apply(standard_normal(rng, prop.mean.size()));
}

Preconditioner::Preconditioner(const SymMatrix& m)
    : metric(m), inverse(numkit::invert_spd(m)), inverse_factor(numkit::cholesky(inverse)) {}

Preconditioner Preconditioner::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return Preconditioner(SymMatrix::Identity(k, k));
}

LocalGeometry local_geometry(const DerivativeBundle& bundle, const MetricOptions& options) {
  if (!bundle.hessian) throw MetricFailure("metric: bundle carries no Hessian");
  const SymMatrix neg_h = -*bundle.hessian;
  try {
    SymMatrix m = options.softabs ? numkit::softabs_metric(neg_h, options.alpha) : neg_h;
    numkit::PosDefFactor f = numkit::cholesky(m);
    // With P the exchange matrix and P M P = R R^T, the lower factor of M^{-1}
    // is P R^{-T} P.
    const SymMatrix reversed = m.reverse();
    const numkit::PosDefFactor r = numkit::cholesky(reversed);
    const auto n = m.rows();
    const Matrix r_inv = r.lower().triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    Matrix lower = r_inv.transpose().reverse();
    lower.triangularView<Eigen::StrictlyUpper>().setZero();
    numkit::PosDefFactor inv_f(std::move(lower));
    SymMatrix inv = inv_f.reconstruct();
    return LocalGeometry{std::move(m), std::move(f), std::move(inv), std::move(inv_f)};
  } catch (const NotPositiveDefinite& e) {
    throw MetricFailure(std::string("metric not positive definite: ") + e.what());
  } catch (const NonFiniteInput& e) {
    throw MetricFailure(std::string("metric not finite: ") + e.what());
  }
}

GaussianProposal mala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                               const Preconditioner& precond) {
  require_gradient(bundle, theta);
  if (!(epsilon > 0.0)) throw Error("mala_proposal: epsilon must be positive");
  Vector mean = theta + (0.5 * epsilon * epsilon) * (precond.inverse * bundle.gradient);
  return GaussianProposal{std::move(mean), precond.inverse_factor.scaled(epsilon)};
}

GaussianProposal smmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                 const LocalGeometry& geometry) {
  require_gradient(bundle, theta);
  if (!(epsilon > 0.0)) throw Error("smmala_proposal: epsilon must be positive");
  Vector mean = theta + (0.5 * epsilon * epsilon) * numkit::chol_solve(geometry.metric_factor, bundle.gradient);
  numkit::PosDefFactor cov = geometry.inverse_factor.scaled(epsilon);
  return GaussianProposal{std::move(mean), std::move(cov)};
}

GaussianProposal smmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                 const MetricOptions& options) {
  return smmala_proposal(bundle, theta, epsilon, local_geometry(bundle, options));
}

std::vector<SymMatrix> metric_slices(const DerivativeBundle& bundle, const MetricOptions& options) {
  if (!bundle.metric_derivs || !bundle.hessian) throw MetricFailure("mmala: bundle carries no metric derivatives");
  if (!options.softabs) return *bundle.metric_derivs;
  const SymMatrix neg_h = -*bundle.hessian;
  std::vector<SymMatrix> out;
  out.reserve(bundle.metric_derivs->size());
  for (const auto& d : *bundle.metric_derivs) out.push_back(numkit::softabs_derivative(neg_h, d, options.alpha));
  return out;
}

Vector mmala_gamma(const SymMatrix& metric_inverse, const std::vector<SymMatrix>& slices) {
  const auto n = metric_inverse.rows();
  if (static_cast<Eigen::Index>(slices.size()) != n) throw DimensionMismatch("mmala_gamma: slice count");
  Vector gamma = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // column j of Minv dM_j Minv
    const Vector col = metric_inverse * (slices[static_cast<std::size_t>(j)] * metric_inverse.col(j));
    gamma -= 0.5 * col;
  }
  return gamma;
}

GaussianProposal mmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                const LocalGeometry& geometry, const MetricOptions& options) {
  GaussianProposal p = smmala_proposal(bundle, theta, epsilon, geometry);
  const Vector gamma = mmala_gamma(geometry.inverse, metric_slices(bundle, options));
  p.mean += (epsilon * epsilon) * gamma;
  return p;
}

GaussianProposal mmala_proposal(const DerivativeBundle& bundle, const Vector& theta, double epsilon,
                                const MetricOptions& options) {
  return mmala_proposal(bundle, theta, epsilon, local_geometry(bundle, options), options);
}

LangevinKernel::LangevinKernel(LangevinKernelSpec spec, std::size_t dim) : spec_(std::move(spec)) {
  if (!(spec_.epsilon > 0.0)) throw Error("LangevinKernel: epsilon must be positive");
  if (spec_.variant == LangevinVariant::mala) {
    precond_ = spec_.precond ? Preconditioner(*spec_.precond) : Preconditioner::identity(dim);
    if (precond_->metric.rows() != static_cast<Eigen::Index>(dim)) {
      throw DimensionMismatch("LangevinKernel: preconditioner dimension");
    }
  }
}

void LangevinKernel::set_epsilon(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error("LangevinKernel: epsilon must be positive");
  spec_.epsilon = eps;
}

DerivativeOrder LangevinKernel::required_order() const {
  switch (spec_.variant) {
    case LangevinVariant::mala:
      return DerivativeOrder::gradient;
    case LangevinVariant::smmala:
      return DerivativeOrder::hessian;
    case LangevinVariant::mmala:
      return DerivativeOrder::metric_derivatives;
  }
  return DerivativeOrder::gradient;
}

LocalGeometry LangevinKernel::geometry(const DerivativeBundle& bundle) const {
  return local_geometry(bundle, spec_.metric);
}

GaussianProposal LangevinKernel::propose(const Vector& theta, const DerivativeBundle& bundle,
                                         const LocalGeometry* geometry) const {
  switch (spec_.variant) {
    case LangevinVariant::mala:
      return mala_proposal(bundle, theta, spec_.epsilon, *precond_);
    case LangevinVariant::smmala:
      if (!geometry) throw MetricFailure("smmala: geometry required");
      return smmala_proposal(bundle, theta, spec_.epsilon, *geometry);
    case LangevinVariant::mmala:
      if (!geometry) throw MetricFailure("mmala: geometry required");
      return mmala_proposal(bundle, theta, spec_.epsilon, *geometry, spec_.metric);
  }
  throw Error("LangevinKernel: unknown variant");
}

double mh_accept_log_ratio(double logp_cur, double logp_prop, double logq_fwd, double logq_rev) {
  if (logp_prop == kNegInf || logq_rev == kNegInf) return kNegInf;
  const double r = (logp_prop + logq_rev) - (logp_cur + logq_fwd);
  if (std::isnan(r)) return kNegInf;
  return std::min(0.0, r);
}

// Adaptive Metropolis ---------------------------------------------------------------

namespace {

std::optional<numkit::PosDefFactor> try_cholesky(const SymMatrix& s) {
  try {
    return numkit::cholesky(s);
  } catch (const NotPositiveDefinite&) {
    return std::nullopt;
  } catch (const NonFiniteInput&) {
    return std::nullopt;
  }
}

}  // namespace

AMState am_init(const Vector& theta0, const SymMatrix& seed_cov, const AMConfig& cfg) {
  if (seed_cov.rows() != theta0.size() || seed_cov.cols() != theta0.size()) {
    throw DimensionMismatch("am_init: seed covariance dimension");
  }
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw Error("am_init: lambda must lie in (0,1]");
  if (!(cfg.gamma_fixed > 0.0)) throw Error("am_init: gamma_fixed must be positive");
  if (!(cfg.beta > 0.0)) throw Error("am_init: beta must be positive");
  if (cfg.seed_weight == 0) throw Error("am_init: seed_weight must be at least 1");
  AMState s;
  s.count = cfg.seed_weight;
  s.mean = theta0;
  s.cov = 0.5 * (seed_cov + seed_cov.transpose());
  s.beta = cfg.beta;
  s.lambda = cfg.lambda;
  s.gamma_fixed = cfg.gamma_fixed;
  s.force_refactorization = cfg.force_refactorization;
  s.cov_factor = try_cholesky(s.cov);
  return s;
}

AMState am_init(const Vector& theta0, const numkit::PosDefFactor& seed_factor, const AMConfig& cfg) {
  AMState s = am_init(theta0, SymMatrix::Identity(theta0.size(), theta0.size()), cfg);
  if (static_cast<Eigen::Index>(seed_factor.dim()) != theta0.size()) throw DimensionMismatch("am_init: seed factor dimension");
  s.cov = seed_factor.reconstruct();
  s.cov_factor = seed_factor;
  return s;
}

AMState am_update(AMState state, const Vector& theta_new) {
  if (theta_new.size() != state.mean.size()) throw DimensionMismatch("am_update");
  const double k = static_cast<double>(state.count);
  const Vector old_mean = state.mean;
  const Vector new_mean = (k * old_mean + theta_new) / (k + 1.0);

  SymMatrix cov = (k - 1.0) * state.cov + theta_new * theta_new.transpose() -
                  (k + 1.0) * (new_mean * new_mean.transpose()) + k * (old_mean * old_mean.transpose());
  cov /= k;
  state.cov = 0.5 * (cov + cov.transpose());
  state.mean = new_mean;
  state.count += 1;

  std::optional<numkit::PosDefFactor> factor;
  if (!state.force_refactorization && state.cov_factor && k > 1.0) {
    try {
      numkit::PosDefFactor f = state.cov_factor->scaled(std::sqrt((k - 1.0) / k));
      f = numkit::rank_one_update(f, theta_new / std::sqrt(k), +1);
      f = numkit::rank_one_update(f, old_mean, +1);
      f = numkit::rank_one_update(f, std::sqrt((k + 1.0) / k) * new_mean, -1);
      factor = std::move(f);
    } catch (const DowndateBreaksPositivity&) {
      factor.reset();
    } catch (const NotPositiveDefinite&) {
      factor.reset();
    }
  }
  state.cov_factor = factor ? std::move(factor) : try_cholesky(state.cov);
  return state;
}

double am_proposal_logpdf(const AMState& state, const Vector& current, const Vector& x) {
  if (x.size() != current.size() || current.size() != state.mean.size()) {
    throw DimensionMismatch("am_proposal_logpdf");
  }
  const double n = static_cast<double>(x.size());
  const Vector d = x - current;
  const double log_fixed = -0.5 * (n * (kLog2Pi + std::log(state.gamma_fixed)) + d.squaredNorm() / state.gamma_fixed);
  const double fixed_term = std::log(state.lambda) + log_fixed;
  if (!state.cov_factor || state.lambda >= 1.0) return fixed_term;
  const numkit::PosDefFactor& l = *state.cov_factor;
  const Vector w = l.solve_lower(d);
  const double log_adapt = -0.5 * (n * (kLog2Pi + std::log(state.beta)) + l.log_det() + w.squaredNorm() / state.beta);
  return log_sum_exp(std::log1p(-state.lambda) + log_adapt, fixed_term);
}

Vector am_proposal_sample(const AMState& state, const Vector& current, Rng& rng) {
  if (current.size() != state.mean.size()) throw DimensionMismatch("am_proposal_sample");
  const double u = uniform01(rng);
  const Vector z = standard_normal(rng, current.size());
  if (u < 1.0 - state.lambda && state.cov_factor) {
    return current + std::sqrt(state.beta) * state.cov_factor->apply(z);
  }
  return current + std::sqrt(state.gamma_fixed) * z;
}

SymMatrix empirical_covariance(const std::vector<Vector>& history) {
  if (history.size() < 2) throw Error("empirical_covariance: need at least two points");
  const auto n = history.front().size();
  const double k = static_cast<double>(history.size() - 1);
  Vector mean = Vector::Zero(n);
  SymMatrix outer = SymMatrix::Zero(n, n);
  for (const auto& h : history) {
    mean += h;
    outer += h * h.transpose();
  }
  mean /= (k + 1.0);
  return (outer - (k + 1.0) * mean * mean.transpose()) / k;
}

}  // namespace gamc::kernels
