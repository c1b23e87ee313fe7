#include "gamc/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gamc/csv.hpp"

namespace gamc::targets {

GaussianTarget::GaussianTarget(SymMatrix precision) : precision_(std::move(precision)) {
  if (precision_.rows() != precision_.cols() || precision_.rows() == 0) {
    throw DimensionMismatch("GaussianTarget: precision must be square and non-empty");
  }
  numkit::cholesky(precision_);
}

GaussianTarget GaussianTarget::standard(std::size_t n) {
  return GaussianTarget(SymMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

SymMatrix geometric_correlation(std::size_t n, double xi) {
  const auto m = static_cast<Eigen::Index>(n);
  SymMatrix s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) s(i, j) = std::pow(xi, static_cast<double>(std::abs(i - j)));
  }
  return s;
}

StudentTTarget::StudentTTarget(std::size_t n, double dof, double xi)
    : n_(n), dof_(dof), xi_(xi), correlation_(geometric_correlation(n, xi)) {
  if (n == 0) throw InvalidParams("StudentTTarget: dimension must be positive");
  if (!(dof > 2.0)) throw InvalidParams("StudentTTarget: degrees of freedom must exceed 2");
  if (!(xi > 0.0 && xi < 1.0)) throw InvalidParams("StudentTTarget: xi must lie in (0,1)");
  scale_ = ((dof - 2.0) / dof) * correlation_;
  scale_factor_ = numkit::cholesky(scale_);
  scale_inverse_ = numkit::invert_spd(scale_);
}

Vector StudentTTarget::analytic_gradient(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n_) throw DimensionMismatch("student_t: dimension");
  const Vector y = numkit::chol_solve(scale_factor_, x);
  const double q = x.dot(y);
  return -((dof_ + static_cast<double>(n_)) / dof_) / (1.0 + q / dof_) * y;
}

double student_t_log_density(const StudentTTarget& target, const Vector& x) {
  return target.log_density(x);
}

Vector student_t_analytic_gradient(const StudentTTarget& target, const Vector& x) {
  return target.analytic_gradient(x);
}

double solve_kepler(double mean_anomaly, double eccentricity) {
  if (!(eccentricity >= 0.0 && eccentricity < 1.0)) {
    throw InvalidParams("solve_kepler: eccentricity must lie in [0,1)");
  }
  if (!std::isfinite(mean_anomaly)) throw InvalidParams("solve_kepler: non-finite mean anomaly");
  double m = std::fmod(mean_anomaly, kTwoPi);
  if (m < 0.0) m += kTwoPi;
  const double shift = mean_anomaly - m;
  if (m == 0.0 || eccentricity == 0.0) return m + shift;

  // f(E) = E - e sin E - M is increasing with f(0) < 0 < f(2 pi).
  double lo = 0.0;
  double hi = kTwoPi;
  double e = eccentricity < 0.8 ? m : std::numbers::pi;
  double best = e;
  double best_res = HUGE_VAL;
  for (int iter = 0; iter < 50; ++iter) {
    const double f = e - eccentricity * std::sin(e) - m;
    if (std::abs(f) < best_res) {
      best_res = std::abs(f);
      best = e;
    }
    if (std::abs(f) <= 1e-15) break;
    if (f < 0.0) {
      lo = e;
    } else {
      hi = e;
    }
    const double fp = 1.0 - eccentricity * std::cos(e);
    double next = e - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == e) break;
    e = next;
  }
  if (best_res > 1e-12) throw NoConvergence("solve_kepler: residual " + std::to_string(best_res));
  return best + shift;
}

Vector RVParams::to_vector() const {
  Vector v(static_cast<Eigen::Index>(dim()));
  v(0) = systemic;
  for (std::size_t j = 0; j < planets.size(); ++j) {
    const auto b = static_cast<Eigen::Index>(1 + 5 * j);
    v(b) = planets[j].amplitude;
    v(b + 1) = planets[j].period;
    v(b + 2) = planets[j].eccentricity;
    v(b + 3) = planets[j].mean_anomaly0;
    v(b + 4) = planets[j].pericenter;
  }
  return v;
}

RVParams RVParams::from_vector(const Vector& theta) {
  if (theta.size() < 6 || (theta.size() - 1) % 5 != 0) {
    throw DimensionMismatch("RVParams: length must be 5 * planets + 1");
  }
  RVParams p;
  p.systemic = theta(0);
  const auto np = static_cast<std::size_t>((theta.size() - 1) / 5);
  for (std::size_t j = 0; j < np; ++j) {
    const auto b = static_cast<Eigen::Index>(1 + 5 * j);
    p.planets.push_back({theta(b), theta(b + 1), theta(b + 2), theta(b + 3), theta(b + 4)});
  }
  return p;
}

RVParams RVParams::one_planet_reference() {
  constexpr double q = std::numbers::pi / 4.0;
  return RVParams{1.0, {{20.0, 50.0, 0.2, q, q}}};
}

RVParams RVParams::two_planet_reference() {
  constexpr double q = std::numbers::pi / 4.0;
  return RVParams{1.0, {{30.0, 40.0, 0.2, q, q}, {30.0, 80.8, 0.2, q, q}}};
}

namespace {

void validate_orbits(const RVParams& p) {
  for (const auto& pl : p.planets) {
    if (!(pl.eccentricity >= 0.0 && pl.eccentricity < 1.0)) {
      throw InvalidParams("rv: eccentricity must lie in [0,1)");
    }
    if (!(pl.period > 0.0)) throw InvalidParams("rv: period must be positive");
    if (!(pl.amplitude >= 0.0)) throw InvalidParams("rv: amplitude must be non-negative");
  }
}

std::vector<double> packed(const RVParams& p) {
  const Vector v = p.to_vector();
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

double rv_model_velocity(const RVParams& params, double t, const RVModelOptions& options) {
  validate_orbits(params);
  return rv_velocity(packed(params), t, options);
}

void RVDataset::validate() const {
  if (times.empty()) throw InvalidParams("RVDataset: empty");
  if (velocities.size() != times.size() || sigmas.size() != times.size()) {
    throw InvalidParams("RVDataset: column lengths differ");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(velocities[i]) || !std::isfinite(sigmas[i])) {
      throw InvalidParams("RVDataset: non-finite entry");
    }
    if (!(sigmas[i] > 0.0)) throw InvalidParams("RVDataset: sigma must be positive");
  }
}

double rv_log_likelihood(const RVParams& params, const RVDataset& data, const RVModelOptions& options) {
  validate_orbits(params);
  return rv_log_likelihood_t(packed(params), data, options);
}

bool rv_in_support(const Vector& theta, const RVPriorConfig& prior) {
  if (theta.size() < 6 || (theta.size() - 1) % 5 != 0) return false;
  if (!theta.allFinite()) return false;
  if (!(theta(0) >= prior.systemic_min && theta(0) <= prior.systemic_max)) return false;
  const auto np = (theta.size() - 1) / 5;
  for (Eigen::Index j = 0; j < np; ++j) {
    const auto b = 1 + 5 * j;
    const double k = theta(b), p = theta(b + 1), e = theta(b + 2), m0 = theta(b + 3), w = theta(b + 4);
    if (!(k > 0.0 && k <= prior.amplitude_max)) return false;
    if (!(p > 0.0 && p <= prior.period_max)) return false;
    if (!(e >= 0.0 && e < 1.0)) return false;
    if (!(m0 >= 0.0 && m0 < kTwoPi)) return false;
    if (!(w >= 0.0 && w < kTwoPi)) return false;
  }
  return true;
}

double rv_log_prior(const Vector& theta, const RVPriorConfig& cfg) {
  if (!rv_in_support(theta, cfg)) return kNegInf;
  return rv_log_prior_t(std::vector<double>(theta.data(), theta.data() + theta.size()), cfg);
}

double rv_log_prior(const RVParams& params, const RVPriorConfig& cfg) {
  return rv_log_prior(params.to_vector(), cfg);
}

RVPosteriorTarget::RVPosteriorTarget(RVDataset data, std::size_t planets, RVPriorConfig prior,
                                     RVModelOptions options)
    : data_(std::move(data)), planets_(planets), prior_(prior), options_(options) {
  data_.validate();
  if (planets_ == 0) throw InvalidParams("RVPosteriorTarget: need at least one planet");
}

RVLikelihoodTarget::RVLikelihoodTarget(RVDataset data, std::size_t planets, RVModelOptions options)
    : data_(std::move(data)), planets_(planets), options_(options) {
  data_.validate();
  if (planets_ == 0) throw InvalidParams("RVLikelihoodTarget: need at least one planet");
}

bool RVLikelihoodTarget::in_support(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim() || !x.allFinite()) return false;
  for (std::size_t j = 0; j < planets_; ++j) {
    const auto b = static_cast<Eigen::Index>(1 + 5 * j);
    if (!(x(b + 1) > 0.0)) return false;
    if (!(x(b + 2) >= 0.0 && x(b + 2) < 1.0)) return false;
  }
  return true;
}

std::vector<double> uniform_times(std::size_t count, double span) {
  std::vector<double> t(count);
  if (count == 1) {
    t[0] = 0.0;
    return t;
  }
  for (std::size_t i = 0; i < count; ++i) t[i] = span * static_cast<double>(i) / static_cast<double>(count - 1);
  return t;
}

RVDataset simulate_rv_dataset(const RVParams& truth, const std::vector<double>& times,
                              const std::vector<double>& sigmas, Rng& rng, const RVModelOptions& options,
                              std::vector<double>* noise) {
  validate_orbits(truth);
  if (times.size() != sigmas.size()) throw InvalidParams("simulate_rv_dataset: times and sigmas differ in length");
  const auto theta = packed(truth);
  std::normal_distribution<double> normal(0.0, 1.0);
  RVDataset d;
  d.times = times;
  d.sigmas = sigmas;
  d.velocities.resize(times.size());
  if (noise) noise->assign(times.size(), 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(sigmas[i] >= 0.0)) throw InvalidParams("simulate_rv_dataset: negative sigma");
    const double eps = sigmas[i] * normal(rng);
    d.velocities[i] = rv_velocity(theta, times[i], options) + eps;
    if (noise) (*noise)[i] = eps;
  }
  return d;
}

void write_rv_csv(const RVDataset& data, const std::string& path) {
  csv::Table t;
  t.header = {"t", "v", "sigma"};
  for (std::size_t i = 0; i < data.size(); ++i) {
    t.rows.push_back({csv::format_double(data.times[i]), csv::format_double(data.velocities[i]),
                      csv::format_double(data.sigmas[i])});
  }
  csv::write(path, t);
}

RVDataset read_rv_csv(const std::string& path) {
  const csv::Table t = csv::read(path);
  const auto ct = t.column("t"), cv = t.column("v"), cs = t.column("sigma");
  RVDataset d;
  for (const auto& r : t.rows) {
    d.times.push_back(csv::parse_double(r[ct]));
    d.velocities.push_back(csv::parse_double(r[cv]));
    d.sigmas.push_back(csv::parse_double(r[cs]));
  }
  d.validate();
  return d;
}

}  // namespace gamc::targets
