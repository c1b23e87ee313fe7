#include "gamc/diagnostics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gamc/errors.hpp"

namespace gamc::diagnostics {

namespace {

constexpr double kSigmaFloor = 1e-6;

struct Centered {
  std::vector<double> d;
  double gamma0 = 0.0;
};

Centered center(const std::vector<double>& x) {
  if (x.size() < 2) throw InvalidParams("autocovariance: need at least two samples");
  const double m = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFiniteInput("autocovariance: non-finite sample");
    mean += v;
  }
  mean /= m;
  Centered c;
  c.d.resize(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c.d[i] = x[i] - mean;
    acc += c.d[i] * c.d[i];
  }
  c.gamma0 = acc / m;
  if (!(c.gamma0 > 0.0)) throw DegenerateChain("chain has zero variance");
  return c;
}

double lag_cov(const std::vector<double>& d, std::size_t k) {
  const std::size_t m = d.size();
  double acc = 0.0;
  for (std::size_t i = 0; i + k < m; ++i) acc += d[i] * d[i + k];
  return acc / static_cast<double>(m);
}

}  // namespace

std::vector<double> autocovariance(const std::vector<double>& x, std::size_t max_lag) {
  const Centered c = center(x);
  max_lag = std::min(max_lag, x.size() - 1);
  std::vector<double> out(max_lag + 1);
  out[0] = c.gamma0;
  for (std::size_t k = 1; k <= max_lag; ++k) out[k] = lag_cov(c.d, k);
  return out;
}

GeyerEstimate geyer(const std::vector<double>& x, std::optional<std::size_t> max_lag) {
  if (x.size() < 10) throw InvalidParams("ess: need at least 10 samples");
  const Centered c = center(x);
  const std::size_t m = x.size();
  const std::size_t lag_limit = std::min(max_lag.value_or(m / 2), m - 1);

  GeyerEstimate g;
  g.gamma0 = c.gamma0;
  double sum = 0.0;
  double prev = HUGE_VAL;
  for (std::size_t t = 0; 2 * t + 1 <= lag_limit; ++t) {
    const double a = t == 0 ? c.gamma0 : lag_cov(c.d, 2 * t);
    const double pair = a + lag_cov(c.d, 2 * t + 1);
    if (!(pair > 0.0)) break;
    prev = std::min(prev, pair);
    sum += prev;
    ++g.pairs;
  }
  g.sigma2 = std::max(-c.gamma0 + 2.0 * sum, kSigmaFloor * c.gamma0);
  const double md = static_cast<double>(m);
  g.ess = std::min(md * c.gamma0 / g.sigma2, md);
  return g;
}

double ess_geyer(const std::vector<double>& x) { return geyer(x).ess; }

double mcse(const std::vector<double>& x) {
  const GeyerEstimate g = geyer(x);
  return std::sqrt(g.sigma2 / static_cast<double>(x.size()));
}

EssReport ess_report_from(std::vector<double> per) {
  if (per.empty()) throw InvalidParams("ess_report: no coordinates");
  EssReport r;
  r.per_coordinate = per;
  std::sort(per.begin(), per.end());
  r.min = per.front();
  r.max = per.back();
  r.mean = std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
  const std::size_t h = per.size() / 2;
  r.median = per.size() % 2 ? per[h] : 0.5 * (per[h - 1] + per[h]);
  return r;
}

std::vector<double> column(const Matrix& states, Eigen::Index j) {
  std::vector<double> c(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index i = 0; i < states.rows(); ++i) c[static_cast<std::size_t>(i)] = states(i, j);
  return c;
}

EssReport ess_report(const Matrix& states) {
  std::vector<double> per;
  per.reserve(static_cast<std::size_t>(states.cols()));
  for (Eigen::Index j = 0; j < states.cols(); ++j) per.push_back(ess_geyer(column(states, j)));
  return ess_report_from(std::move(per));
}

double speedup(double efficiency, double reference_efficiency) {
  if (!(reference_efficiency > 0.0)) throw InvalidParams("speedup: reference efficiency must be positive");
  return efficiency / reference_efficiency;
}

SamplerSummary summarize_states(const std::string& sampler, std::size_t chain, const Matrix& states,
                                const std::vector<char>& accepted, double runtime_seconds,
                                const std::optional<SamplerSummary>& mala_reference) {
  if (static_cast<std::size_t>(states.rows()) != accepted.size()) {
    throw DimensionMismatch("summarize: states and accept flags differ in length");
  }
  SamplerSummary s;
  s.sampler = sampler;
  s.chain = chain;
  const auto n_acc = std::count(accepted.begin(), accepted.end(), char{1});
  s.acceptance_rate = accepted.empty() ? 0.0 : static_cast<double>(n_acc) / static_cast<double>(accepted.size());
  s.ess = ess_report(states);
  s.runtime_seconds = runtime_seconds;
  s.efficiency = s.ess.min / std::max(runtime_seconds, 1e-9);
  if (mala_reference) s.speedup = speedup(s.efficiency, mala_reference->efficiency);
  return s;
}

SamplerSummary summarize(const ChainRecord& record, std::size_t chain,
                         const std::optional<SamplerSummary>& mala_reference) {
  return summarize_states(record.sampler, chain, record.retained_states(), record.retained_accepted(),
                          record.wall_time, mala_reference);
}

std::vector<double> running_mean(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i];
    out[i] = acc / static_cast<double>(i + 1);
  }
  return out;
}

namespace {

std::vector<std::string> coord_header(const std::string& first, Eigen::Index n) {
  std::vector<std::string> h{first};
  for (Eigen::Index j = 0; j < n; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

}  // namespace

csv::Table trace_table(const ChainRecord& record) {
  csv::Table t;
  const auto n = static_cast<Eigen::Index>(record.dim);
  t.header = coord_header("iter", n);
  t.header.insert(t.header.end(), {"log_density", "accepted", "geometric"});
  for (std::size_t i = std::min(record.burn_in, record.size()); i < record.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(csv::format_double(record.states(static_cast<Eigen::Index>(i), j)));
    row.push_back(csv::format_double(record.log_densities[i]));
    row.push_back(record.accepted[i] ? "1" : "0");
    row.push_back(record.geometric_step[i] ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  return t;
}

TraceData parse_trace(const csv::Table& table) {
  std::vector<std::size_t> coords;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& h = table.header[c];
    if (h.size() > 1 && h[0] == 'x' && std::all_of(h.begin() + 1, h.end(), ::isdigit)) coords.push_back(c);
  }
  if (coords.empty()) throw IOError("trace: no coordinate columns");
  const auto ld = table.column("log_density"), acc = table.column("accepted"), geo = table.column("geometric");
  TraceData d;
  d.states.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    for (std::size_t j = 0; j < coords.size(); ++j) {
      d.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = csv::parse_double(r[coords[j]]);
    }
    d.log_densities.push_back(csv::parse_double(r[ld]));
    d.accepted.push_back(r[acc] == "1" ? 1 : 0);
    d.geometric.push_back(r[geo] == "1" ? 1 : 0);
  }
  return d;
}

csv::Table acf_table(const Matrix& states, std::size_t max_lag) {
  csv::Table t;
  t.header = coord_header("lag", states.cols());
  std::vector<std::vector<double>> acfs;
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    try {
      auto g = autocovariance(column(states, j), max_lag);
      const double g0 = g.front();
      for (auto& v : g) v /= g0;
      acfs.push_back(std::move(g));
    } catch (const DegenerateChain&) {
      acfs.emplace_back();
    } catch (const InvalidParams&) {
      acfs.emplace_back();
    }
  }
  for (std::size_t k = 0; k <= max_lag && k < static_cast<std::size_t>(states.rows()); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (const auto& a : acfs) row.push_back(k < a.size() ? csv::format_double(a[k]) : "nan");
    t.rows.push_back(std::move(row));
  }
  return t;
}

csv::Table runmean_table(const Matrix& states) {
  csv::Table t;
  t.header = coord_header("iter", states.cols());
  std::vector<std::vector<double>> means;
  for (Eigen::Index j = 0; j < states.cols(); ++j) means.push_back(running_mean(column(states, j)));
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (const auto& mvec : means) row.push_back(csv::format_double(mvec[static_cast<std::size_t>(i)]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

csv::Table summary_table(const std::vector<SamplerSummary>& rows) {
  csv::Table t;
  t.header = {"sampler", "chain", "AR", "ess_min", "ess_mean", "ess_median", "ess_max", "t", "eff", "speed"};
  for (const auto& s : rows) {
    t.rows.push_back({s.sampler, std::to_string(s.chain), csv::format_double(s.acceptance_rate),
                      csv::format_double(s.ess.min), csv::format_double(s.ess.mean), csv::format_double(s.ess.median),
                      csv::format_double(s.ess.max), csv::format_double(s.runtime_seconds),
                      csv::format_double(s.efficiency), s.speedup ? csv::format_double(*s.speedup) : ""});
  }
  return t;
}

double complexity_bound(SamplerKind kind, CostRegime regime, std::size_t n, double f) {
  const double nd = static_cast<double>(n);
  const bool simple = regime == CostRegime::simple;
  switch (kind) {
    case SamplerKind::mala:
      return simple ? nd * nd : f * nd;
    case SamplerKind::smmala:
      return simple ? nd * nd * nd : f * nd * nd;
    case SamplerKind::mmala:
      return simple ? nd * nd * nd : f * nd * nd * nd;
    case SamplerKind::am:
      return simple ? std::pow(nd, 2.373) : f;
    case SamplerKind::gamc:
      break;
  }
  throw InvalidParams("complexity_bound: no fixed bound for this sampler");
}

std::vector<ComplexityRow> complexity_table(std::size_t n, double f) {
  if (n == 0) throw InvalidParams("complexity_table: n must be positive");
  const struct {
    SamplerKind kind;
    const char* name;
    const char* simple;
    const char* expensive;
  } specs[] = {
      {SamplerKind::mala, "MALA", "n^2", "f n"},
      {SamplerKind::smmala, "SMMALA", "n^3", "f n^2"},
      {SamplerKind::mmala, "MMALA", "n^3", "f n^3"},
      {SamplerKind::am, "AM", "n^2.373", "f"},
  };
  std::vector<ComplexityRow> rows;
  for (const auto& s : specs) {
    rows.push_back({s.name, s.simple, s.expensive, complexity_bound(s.kind, CostRegime::simple, n, f),
                    complexity_bound(s.kind, CostRegime::expensive, n, f)});
  }
  return rows;
}

std::string format_complexity_table(const std::vector<ComplexityRow>& rows, std::size_t n, double f) {
  std::ostringstream os;
  os << "per-step bounds, n = " << n << ", f = " << csv::format_double(f) << "\n";
  os << "sampler  simple            expensive\n";
  for (const auto& r : rows) {
    std::string a = r.simple_bound + " = " + csv::format_double(r.simple);
    std::string b = r.expensive_bound + " = " + csv::format_double(r.expensive);
    os << r.sampler << std::string(9 - std::min<std::size_t>(8, r.sampler.size()), ' ') << a
       << std::string(a.size() < 18 ? 18 - a.size() : 1, ' ') << b << "\n";
  }
  return os.str();
}

}  // namespace gamc::diagnostics
