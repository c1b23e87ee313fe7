#pragma once

// Chain diagnostics: autocovariance, Geyer effective sample size, summaries,
// plot-ready tables and per-step complexity bounds.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gamc/csv.hpp"
#include "gamc/gamc.hpp"

namespace gamc::diagnostics {

/// Biased (1/m) autocovariances about the sample mean for lags 0..max_lag.
/// Throws DegenerateChain on zero variance.
std::vector<double> autocovariance(const std::vector<double>& x, std::size_t max_lag);

struct GeyerEstimate {
  double ess = 0.0;
  double gamma0 = 0.0;
  /// Monte Carlo variance of the mean times m.
  double sigma2 = 0.0;
  /// Number of positive lag pairs kept.
  std::size_t pairs = 0;
};

/// Initial monotone sequence estimator; max_lag defaults to m/2.
GeyerEstimate geyer(const std::vector<double>& x, std::optional<std::size_t> max_lag = std::nullopt);
double ess_geyer(const std::vector<double>& x);
/// Monte Carlo standard error of the sample mean.
double mcse(const std::vector<double>& x);

struct EssReport {
  std::vector<double> per_coordinate;
  double min = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
};

EssReport ess_report(const Matrix& states);
EssReport ess_report_from(std::vector<double> per_coordinate);

struct SamplerSummary {
  std::string sampler;
  std::size_t chain = 0;
  double acceptance_rate = 0.0;
  EssReport ess;
  double runtime_seconds = 0.0;
  double efficiency = 0.0;
  std::optional<double> speedup;
};

/// Efficiency ratio sampler / reference.
double speedup(double efficiency, double reference_efficiency);

SamplerSummary summarize_states(const std::string& sampler, std::size_t chain, const Matrix& states,
                                const std::vector<char>& accepted, double runtime_seconds,
                                const std::optional<SamplerSummary>& mala_reference = std::nullopt);

/// Uses the post-burn-in portion of the record.
SamplerSummary summarize(const ChainRecord& record, std::size_t chain = 0,
                         const std::optional<SamplerSummary>& mala_reference = std::nullopt);

std::vector<double> column(const Matrix& states, Eigen::Index j);
std::vector<double> running_mean(const std::vector<double>& x);

/// iter, x0..x{n-1}, log_density, accepted, geometric over retained rows.
csv::Table trace_table(const ChainRecord& record);
/// lag, x0..x{n-1} normalized autocorrelations.
csv::Table acf_table(const Matrix& states, std::size_t max_lag);
/// iter, x0..x{n-1} running means.
csv::Table runmean_table(const Matrix& states);

struct TraceData {
  Matrix states;
  std::vector<double> log_densities;
  std::vector<char> accepted;
  std::vector<char> geometric;
};
TraceData parse_trace(const csv::Table& table);

/// summary.csv layout.
csv::Table summary_table(const std::vector<SamplerSummary>& rows);

enum class CostRegime { simple, expensive };

struct ComplexityRow {
  std::string sampler;
  std::string simple_bound;
  std::string expensive_bound;
  double simple = 0.0;
  double expensive = 0.0;
};

/// Per-step bounds with lower-order terms dropped; f is the target cost.
std::vector<ComplexityRow> complexity_table(std::size_t n, double f = 1.0);
double complexity_bound(SamplerKind kind, CostRegime regime, std::size_t n, double f = 1.0);
std::string format_complexity_table(const std::vector<ComplexityRow>& rows, std::size_t n, double f);

}  // namespace gamc::diagnostics
