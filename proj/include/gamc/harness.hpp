#pragma once

// Experiment orchestration: JSON configuration, target construction, seeded
// multi-chain runs on a worker pool, and CSV/manifest persistence.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gamc/diagnostics.hpp"
#include "gamc/gamc.hpp"
#include "gamc/targets.hpp"

namespace gamc::harness {

struct ScheduleSpec {
  std::string family = "exponential";  // exponential | constant | table
  double r = 1e-4;
  double value = 0.0;
  std::vector<double> table;
  double tail_threshold = 0.1;

  bool operator==(const ScheduleSpec&) const = default;
};

struct SamplerSpec {
  std::string name;
  std::string kind = "gamc";
  double epsilon = 1.0;
  std::optional<double> target_accept;
  double am_target_accept = 0.234;
  std::optional<double> beta;
  double lambda = 0.01;
  double gamma_fixed = 0.001;
  bool softabs = true;
  double alpha = 1000.0;
  bool tune = true;
  std::string geometric = "smmala";
  std::string reseed_weight = "iteration";
  ScheduleSpec schedule;

  bool operator==(const SamplerSpec&) const = default;
};

struct RVSimulationSpec {
  std::size_t n_obs = 50;
  double span = 730.0;
  double sigma = 2.0;
  bool zero_noise = false;
  /// 0 means base_seed.
  std::uint64_t seed = 0;
  /// Packed parameter vector; empty selects the reference system for the
  /// configured number of planets.
  std::vector<double> truth;

  bool operator==(const RVSimulationSpec&) const = default;
};

struct TargetSpec {
  std::string type = "student_t";  // student_t | rv
  std::size_t n = 20;
  double nu = 30.0;
  double xi = 0.9;
  std::size_t planets = 1;
  /// Existing t,v,sigma CSV; empty means simulate.
  std::string dataset;
  RVSimulationSpec simulation;
  std::string prior = "modified_jeffreys";  // modified_jeffreys | uniform

  bool operator==(const TargetSpec&) const = default;
};

struct ExperimentConfig {
  TargetSpec target;
  std::vector<SamplerSpec> samplers;
  std::size_t chains = 10;
  std::size_t iterations = 10000;
  std::size_t burn_in = 1000;
  std::uint64_t base_seed = 1;
  std::string output_dir = "gamc_out";
  bool force_refactorization = false;
  bool c_additive = false;
  std::size_t acf_max_lag = 100;
  bool write_traces = true;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; missing keys take their defaults. Throws ParseError
/// for malformed input and ValidationError naming the offending field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

/// Chain length and burn-in of the published runs.
void apply_paper_scale(ExperimentConfig& cfg);

SamplerConfig to_sampler_config(const SamplerSpec& spec, const ExperimentConfig& cfg);
targets::RVParams rv_truth(const TargetSpec& spec);
targets::RVModelOptions rv_options(const ExperimentConfig& cfg);

struct SimulatedData {
  targets::RVDataset data;
  std::vector<double> noise;
  targets::RVParams truth;
};
SimulatedData simulate_rv(const ExperimentConfig& cfg);

struct DatasetFiles {
  std::string dataset;
  std::string noise;
};
/// Writes dataset.csv and dataset_noise.csv (t, noise) into dir.
DatasetFiles simulate_datasets(const ExperimentConfig& cfg, const std::string& dir);

/// Builds the target; RV targets read cfg.target.dataset or simulate.
std::unique_ptr<LogTarget> make_target(const ExperimentConfig& cfg);

/// Chain start: random point at distance 3 to 5 from the t-target mode, or the
/// RV truth perturbed by 5% relative noise.
Vector initial_state(const ExperimentConfig& cfg, const LogTarget& target, std::uint64_t seed);

struct ChainEntry {
  std::string sampler;
  std::size_t chain = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double wall_time = 0.0;
  double final_epsilon = 0.0;
  double final_beta = 0.0;
  std::size_t n_target_evals = 0;
  std::size_t n_gradient_evals = 0;
  std::size_t n_hessian_evals = 0;
  std::size_t n_metric_failures = 0;
  std::size_t geometric_steps = 0;
  std::string trace;
  std::vector<std::string> files;
};

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string output_dir;
  std::string summary;
  std::string dataset;
  /// Sampler whose mean efficiency is the speed-up reference; empty if none.
  std::string reference_sampler;
  std::string config_json;
  std::vector<std::string> warnings;
  std::vector<ChainEntry> chains;
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

struct RunResult {
  RunManifest manifest;
  std::vector<diagnostics::SamplerSummary> summaries;
  /// Chain records in (sampler, chain) order when kept.
  std::vector<ChainRecord> records;
};

struct RunSettings {
  /// 0 reads GAMC_THREADS, falling back to the hardware concurrency.
  std::size_t threads = 0;
  bool write_files = true;
  bool keep_records = false;
};

RunResult run_experiment(const ExperimentConfig& cfg, const RunSettings& settings = {});

/// Fills in speed-ups relative to the mean efficiency of the reference
/// sampler's rows; leaves them empty when there is no reference.
std::vector<diagnostics::SamplerSummary> finalize_summaries(std::vector<diagnostics::SamplerSummary> rows,
                                                            const std::string& reference_sampler);

/// Recomputes summaries from a run directory's manifest and trace files.
std::vector<diagnostics::SamplerSummary> summarize_directory(const std::string& dir);

std::size_t thread_count_from_env();
std::string version_string();

}  // namespace gamc::harness
