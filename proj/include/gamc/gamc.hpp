#pragma once

// Geometric adaptive Monte Carlo and the baseline chain loops.
//
// At iteration k an independent Bernoulli B_k ~ Bernoulli(s_k) picks the
// kernel: B_k = 1 runs the geometric (Langevin) kernel and restarts the
// adaptive covariance from the metric inverse at the resulting state;
// B_k = 0 runs the adaptive Metropolis mixture over the history since the
// last geometric step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gamc/kernels.hpp"
#include "gamc/random.hpp"
#include "gamc/targets.hpp"

namespace gamc {

struct Schedule {
  enum class Family { exponential, constant, table };

  Family family = Family::exponential;
  double rate = 1e-4;
  double value = 0.0;
  std::vector<double> values;
  /// Tail-sum bound used when validating explicit tables.
  double tail_threshold = 0.1;

  static Schedule exponential(double r);
  static Schedule constant(double s);
  static Schedule table(std::vector<double> values);
};

/// s_k. Tables are zero past their end.
double schedule_prob(const Schedule& s, std::size_t k);

enum class ScheduleStatus { ok, warning };

struct ScheduleCheck {
  ScheduleStatus status = ScheduleStatus::ok;
  std::string message;
};

/// Advisory check that sum s_k is finite. Tables pass when the sum over the
/// second half of the supplied horizon stays below tail_threshold.
ScheduleCheck validate_schedule(const Schedule& s, std::size_t m);

/// (1/m) sum_{k<m} s_k; closed form for the exponential family.
double mean_schedule_weight(const Schedule& s, std::size_t m);

/// Expected per-step cost w c_g + (1 - w) c_a with w the mean schedule weight.
double expected_complexity(double c_g, double c_a, const Schedule& s, std::size_t m);

struct EnvironmentState {
  std::size_t k = 0;    // iterations completed
  std::size_t tau = 0;  // last geometric iteration (1-based), 0 if none
  std::size_t geometric_steps = 0;
};

enum class SamplerKind { mala, smmala, mmala, am, gamc };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

enum class ReseedWeight { iteration, window };

struct SamplerConfig {
  std::string name;
  SamplerKind kind = SamplerKind::gamc;

  /// Initial Langevin step size.
  double epsilon = 1.0;
  /// Acceptance targets for burn-in tuning; defaults depend on the kernel.
  std::optional<double> target_accept;
  double am_target_accept = 0.234;
  bool tune = true;

  /// beta defaults to 2.38^2 / n when unset.
  std::optional<double> beta;
  double lambda = 0.01;
  double gamma_fixed = 0.001;
  bool force_refactorization = false;

  kernels::MetricOptions metric;
  std::optional<SymMatrix> precond;

  Schedule schedule = Schedule::exponential(1e-4);
  kernels::LangevinVariant geometric = kernels::LangevinVariant::smmala;
  /// Weight of the metric seed when a geometric step restarts the adaptive
  /// covariance. iteration: the seed counts as the k+1 states it replaces,
  /// so the recursion keeps the global iteration index. window: the seed is
  /// a single point and drops out once the next state is absorbed.
  ReseedWeight reseed_weight = ReseedWeight::iteration;

  /// Acceptance target used for the Langevin step size.
  double langevin_target() const;
  void validate() const;
};

struct ChainRecord {
  std::string sampler;
  std::size_t dim = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  Vector initial_state;

  /// Row i holds the state after step i (burn-in included).
  Matrix states;
  std::vector<double> log_densities;
  std::vector<char> accepted;
  std::vector<char> geometric_step;

  double wall_time = 0.0;
  std::size_t n_target_evals = 0;
  std::size_t n_gradient_evals = 0;
  std::size_t n_hessian_evals = 0;
  std::size_t n_metric_failures = 0;

  /// Hyperparameters after burn-in tuning.
  double final_epsilon = 0.0;
  double final_beta = 0.0;

  /// Adaptive covariance right after each geometric step, when requested.
  std::vector<SymMatrix> reseeded_covariances;

  std::size_t size() const { return log_densities.size(); }
  std::size_t retained() const { return size() - std::min(burn_in, size()); }
  /// Post-burn-in block of states.
  Matrix retained_states() const;
  std::vector<char> retained_accepted() const;
  std::vector<char> retained_geometric() const;
};

/// Robbins-Monro step on a log-scale hyperparameter:
/// log x += k^{-0.6} (accepted - target).
class AcceptanceController {
 public:
  AcceptanceController(double initial, double target);
  void observe(bool accepted);
  double value() const { return std::exp(log_value_); }
  std::size_t count() const { return count_; }

 private:
  double log_value_;
  double target_;
  std::size_t count_ = 0;
};

struct RunOptions {
  bool record_reseeds = false;
  /// Stream offsets for the proposal and environment generators.
  std::uint64_t proposal_stream = 0;
  std::uint64_t environment_stream = 1;
};

/// Runs burn_in + m steps from theta0. Tuning is active only while
/// k < burn_in. Throws TargetError if theta0 has zero density.
ChainRecord run_chain(const SamplerConfig& cfg, const LogTarget& target, const Vector& theta0, std::size_t m,
                      std::size_t burn_in, std::uint64_t seed, const RunOptions& options = {});

}  // namespace gamc
