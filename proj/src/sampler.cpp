#include <chrono>
#include <cmath>

#include "gamc/errors.hpp"
#include "gamc/gamc.hpp"

namespace gamc {

using kernels::LangevinVariant;

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::mala:
      return "mala";
    case SamplerKind::smmala:
      return "smmala";
    case SamplerKind::mmala:
      return "mmala";
    case SamplerKind::am:
      return "am";
    case SamplerKind::gamc:
      return "gamc";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "mala") return SamplerKind::mala;
  if (name == "smmala") return SamplerKind::smmala;
  if (name == "mmala") return SamplerKind::mmala;
  if (name == "am") return SamplerKind::am;
  if (name == "gamc") return SamplerKind::gamc;
  throw ConfigError("unknown sampler kind '" + name + "'");
}

double SamplerConfig::langevin_target() const {
  if (target_accept) return *target_accept;
  const LangevinVariant v = kind == SamplerKind::mala     ? LangevinVariant::mala
                            : kind == SamplerKind::smmala ? LangevinVariant::smmala
                            : kind == SamplerKind::mmala  ? LangevinVariant::mmala
                                                          : geometric;
  return v == LangevinVariant::mala ? 0.574 : 0.70;
}

void SamplerConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon", "must be positive");
  if (target_accept && !(*target_accept > 0.0 && *target_accept < 1.0)) {
    throw ValidationError("target_accept", "must lie in (0,1)");
  }
  if (!(am_target_accept > 0.0 && am_target_accept < 1.0)) throw ValidationError("am_target_accept", "must lie in (0,1)");
  if (beta && !(*beta > 0.0)) throw ValidationError("beta", "must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ValidationError("lambda", "must lie in (0,1)");
  if (!(gamma_fixed > 0.0)) throw ValidationError("gamma_fixed", "must be positive");
  if (!(metric.alpha > 0.0)) throw ValidationError("alpha", "must be positive");
  if (kind == SamplerKind::gamc && schedule.family == Schedule::Family::exponential && !(schedule.rate > 0.0)) {
    throw ValidationError("schedule.r", "must be positive");
  }
}

Matrix ChainRecord::retained_states() const {
  const auto b = static_cast<Eigen::Index>(std::min(burn_in, size()));
  return states.bottomRows(states.rows() - b);
}

std::vector<char> ChainRecord::retained_accepted() const {
  return {accepted.begin() + static_cast<std::ptrdiff_t>(std::min(burn_in, size())), accepted.end()};
}

std::vector<char> ChainRecord::retained_geometric() const {
  return {geometric_step.begin() + static_cast<std::ptrdiff_t>(std::min(burn_in, size())), geometric_step.end()};
}

AcceptanceController::AcceptanceController(double initial, double target)
    : log_value_(std::log(initial)), target_(target) {
  if (!(initial > 0.0)) throw InvalidParams("controller: initial value must be positive");
}

void AcceptanceController::observe(bool accepted) {
  ++count_;
  log_value_ += std::pow(static_cast<double>(count_), -0.6) * ((accepted ? 1.0 : 0.0) - target_);
}

namespace {

struct Point {
  Vector theta;
  double logp = kNegInf;
  std::optional<DerivativeBundle> bundle;
  std::optional<kernels::LocalGeometry> geometry;
  bool geometry_failed = false;
};

bool covers(const std::optional<DerivativeBundle>& b, DerivativeOrder order) {
  return b && static_cast<int>(b->order) >= static_cast<int>(order);
}

class Chain {
 public:
  Chain(const SamplerConfig& cfg, const LogTarget& target, const Vector& theta0, std::uint64_t seed,
        const RunOptions& options, ChainRecord& rec)
      : cfg_(cfg),
        target_(target),
        options_(options),
        rec_(rec),
        n_(target.dim()),
        proposal_rng_(make_rng(seed, options.proposal_stream)),
        env_rng_(make_rng(seed, options.environment_stream)),
        eps_ctl_(cfg.epsilon, cfg.langevin_target()),
        beta_ctl_(cfg.beta.value_or(2.38 * 2.38 / static_cast<double>(target.dim())), cfg.am_target_accept) {
    if (static_cast<std::size_t>(theta0.size()) != n_) throw DimensionMismatch("run_chain: initial state dimension");
    cur_.theta = theta0;
    ++rec_.n_target_evals;
    cur_.logp = target_.log_density(theta0);
    if (!std::isfinite(cur_.logp)) throw TargetError("run_chain: initial state has zero density");

    if (uses_langevin()) {
      kernels::LangevinKernelSpec spec;
      spec.variant = langevin_variant();
      spec.epsilon = cfg.epsilon;
      spec.precond = cfg.precond;
      spec.metric = cfg.metric;
      langevin_.emplace(std::move(spec), n_);
    }
    if (uses_am()) am_ = kernels::am_init(theta0, fixed_seed(), am_config());
  }

  void run(std::size_t total, std::size_t burn_in) {
    rec_.states.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(n_));
    rec_.log_densities.resize(total);
    rec_.accepted.resize(total);
    rec_.geometric_step.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
      const bool tuning = cfg_.tune && k < burn_in;
      bool accepted = false;
      bool geometric = false;
      switch (cfg_.kind) {
        case SamplerKind::mala:
        case SamplerKind::smmala:
        case SamplerKind::mmala:
          geometric = true;
          accepted = langevin_step(tuning);
          break;
        case SamplerKind::am:
          accepted = am_step(tuning);
          break;
        case SamplerKind::gamc:
          geometric = uniform01(env_rng_) < schedule_prob(cfg_.schedule, k);
          if (geometric) {
            accepted = langevin_step(tuning);
            env_.tau = k + 1;
            ++env_.geometric_steps;
            reseed();
          } else {
            accepted = am_step(tuning);
          }
          break;
      }
      env_.k = k + 1;
      rec_.states.row(static_cast<Eigen::Index>(k)) = cur_.theta.transpose();
      rec_.log_densities[k] = cur_.logp;
      rec_.accepted[k] = accepted ? 1 : 0;
      rec_.geometric_step[k] = geometric ? 1 : 0;
    }
    rec_.final_epsilon = langevin_ ? langevin_->epsilon() : 0.0;
    rec_.final_beta = uses_am() ? am_->beta : 0.0;
  }

 private:
  bool uses_langevin() const { return cfg_.kind != SamplerKind::am; }
  bool uses_am() const { return cfg_.kind == SamplerKind::am || cfg_.kind == SamplerKind::gamc; }

  LangevinVariant langevin_variant() const {
    switch (cfg_.kind) {
      case SamplerKind::mala:
        return LangevinVariant::mala;
      case SamplerKind::smmala:
        return LangevinVariant::smmala;
      case SamplerKind::mmala:
        return LangevinVariant::mmala;
      default:
        return cfg_.geometric;
    }
  }

  kernels::AMConfig am_config() const {
    kernels::AMConfig c;
    c.beta = am_ ? am_->beta : beta_ctl_.value();
    c.lambda = cfg_.lambda;
    c.gamma_fixed = cfg_.gamma_fixed;
    c.force_refactorization = cfg_.force_refactorization;
    return c;
  }

  SymMatrix fixed_seed() const {
    const auto n = static_cast<Eigen::Index>(n_);
    return cfg_.gamma_fixed * SymMatrix::Identity(n, n);
  }

  DerivativeBundle evaluate(const Vector& x, DerivativeOrder order) {
    ++rec_.n_target_evals;
    if (static_cast<int>(order) >= static_cast<int>(DerivativeOrder::gradient)) ++rec_.n_gradient_evals;
    if (static_cast<int>(order) >= static_cast<int>(DerivativeOrder::hessian)) ++rec_.n_hessian_evals;
    return target_.derivatives(x, order);
  }

  // Fills in derivatives and geometry at a point; false when the metric
  // cannot be formed there.
  bool prepare(Point& p) {
    const DerivativeOrder order = langevin_->required_order();
    if (!covers(p.bundle, order)) {
      p.bundle = evaluate(p.theta, order);
      p.geometry.reset();
      p.geometry_failed = false;
    }
    if (!langevin_->position_dependent()) return true;
    if (p.geometry) return true;
    if (p.geometry_failed) return false;
    try {
      p.geometry = langevin_->geometry(*p.bundle);
      return true;
    } catch (const MetricFailure&) {
      p.geometry_failed = true;
      ++rec_.n_metric_failures;
      return false;
    }
  }

  bool langevin_step(bool tuning) {
    const bool accepted = langevin_move();
    if (tuning) {
      eps_ctl_.observe(accepted);
      langevin_->set_epsilon(eps_ctl_.value());
    }
    return accepted;
  }

  bool langevin_move() {
    try {
      if (!prepare(cur_)) return false;
    } catch (const NonFiniteGradient&) {
      return false;
    }
    const kernels::GaussianProposal fwd =
        langevin_->propose(cur_.theta, *cur_.bundle, cur_.geometry ? &*cur_.geometry : nullptr);
    Point next;
    next.theta = kernels::gaussian_sample(fwd, proposal_rng_);
    const double u = uniform01(proposal_rng_);
    if (!target_.in_support(next.theta)) {
      ++rec_.n_target_evals;
      return false;
    }
    try {
      if (!prepare(next)) return false;
      next.logp = next.bundle->value;
      if (!std::isfinite(next.logp)) return false;
      const kernels::GaussianProposal rev =
          langevin_->propose(next.theta, *next.bundle, next.geometry ? &*next.geometry : nullptr);
      const double log_alpha = kernels::mh_accept_log_ratio(cur_.logp, next.logp, kernels::gaussian_logpdf(fwd, next.theta),
                                                            kernels::gaussian_logpdf(rev, cur_.theta));
      if (!(std::log(u) < log_alpha)) return false;
    } catch (const MetricFailure&) {
      ++rec_.n_metric_failures;
      return false;
    } catch (const NonFiniteGradient&) {
      return false;
    } catch (const NonFiniteValue&) {
      return false;
    } catch (const NoConvergence&) {
      return false;
    }
    cur_ = std::move(next);
    return true;
  }

  bool am_step(bool tuning) {
    const Vector x = kernels::am_proposal_sample(*am_, cur_.theta, proposal_rng_);
    const double u = uniform01(proposal_rng_);
    ++rec_.n_target_evals;
    const double logp_x = target_.in_support(x) ? target_.log_density(x) : kNegInf;
    const double log_alpha = kernels::mh_accept_log_ratio(cur_.logp, std::isnan(logp_x) ? kNegInf : logp_x, 0.0, 0.0);
    const bool accepted = std::log(u) < log_alpha;
    if (accepted) {
      cur_ = Point{};
      cur_.theta = x;
      cur_.logp = logp_x;
    }
    if (tuning) {
      beta_ctl_.observe(accepted);
      am_->beta = beta_ctl_.value();
    }
    *am_ = kernels::am_update(std::move(*am_), cur_.theta);
    return accepted;
  }

  // Restart the adaptive covariance at the current state with the metric
  // inverse as seed.
  void reseed() {
    kernels::AMConfig c = am_config();
    if (cfg_.reseed_weight == ReseedWeight::iteration) c.seed_weight = env_.tau;
    if (langevin_->position_dependent()) {
      am_ = cur_.geometry ? kernels::am_init(cur_.theta, cur_.geometry->inverse_factor, c)
                          : kernels::am_init(cur_.theta, fixed_seed(), c);
    } else {
      const auto n = static_cast<Eigen::Index>(n_);
      am_ = kernels::am_init(cur_.theta, cfg_.precond ? numkit::invert_spd(*cfg_.precond) : SymMatrix::Identity(n, n), c);
    }
    if (options_.record_reseeds) rec_.reseeded_covariances.push_back(am_->cov);
  }

  const SamplerConfig& cfg_;
  const LogTarget& target_;
  const RunOptions& options_;
  ChainRecord& rec_;
  std::size_t n_;
  Rng proposal_rng_;
  Rng env_rng_;
  AcceptanceController eps_ctl_;
  AcceptanceController beta_ctl_;
  std::optional<kernels::LangevinKernel> langevin_;
  std::optional<kernels::AMState> am_;
  EnvironmentState env_;
  Point cur_;
};

}  // namespace

ChainRecord run_chain(const SamplerConfig& cfg, const LogTarget& target, const Vector& theta0, std::size_t m,
                      std::size_t burn_in, std::uint64_t seed, const RunOptions& options) {
  cfg.validate();
  if (m == 0) throw ConfigError("run_chain: m must be positive");
  ChainRecord rec;
  rec.sampler = cfg.name.empty() ? to_string(cfg.kind) : cfg.name;
  rec.dim = target.dim();
  rec.burn_in = burn_in;
  rec.seed = seed;
  rec.initial_state = theta0;
  Chain chain(cfg, target, theta0, seed, options, rec);
  const auto start = std::chrono::steady_clock::now();
  chain.run(m + burn_in, burn_in);
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace gamc
