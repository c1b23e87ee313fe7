#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gamc/errors.hpp"
#include "gamc/gamc.hpp"
#include "gamc/targets.hpp"

using namespace gamc;

namespace {

SamplerConfig sampler(SamplerKind kind) {
  SamplerConfig c;
  c.kind = kind;
  c.name = to_string(kind);
  return c;
}

double acceptance(const std::vector<char>& acc) {
  return std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
}

double geometric_fraction(const ChainRecord& r) {
  return std::accumulate(r.geometric_step.begin(), r.geometric_step.end(), 0.0) / static_cast<double>(r.size());
}

}  // namespace

TEST_CASE("schedule probabilities") {
  for (double r : {1e-4, 0.3, 2.0}) CHECK(schedule_prob(Schedule::exponential(r), 0) == 1.0);
  CHECK(schedule_prob(Schedule::exponential(1e-4), 10000) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(schedule_prob(Schedule::exponential(1e-4), 10000) == doctest::Approx(0.367879).epsilon(1e-6));
  const Schedule t = Schedule::table({0.9, 0.4, 0.25});
  CHECK(schedule_prob(t, 1) == 0.4);
  CHECK(schedule_prob(t, 2) == 0.25);
  CHECK(schedule_prob(t, 3) == 0.0);
  CHECK(schedule_prob(Schedule::constant(0.5), 123456) == 0.5);
  CHECK_THROWS_AS(Schedule::table({0.5, 1.5}), InvalidParams);
  CHECK_THROWS_AS(Schedule::constant(-0.1), InvalidParams);
}

TEST_CASE("schedule validation") {
  CHECK(validate_schedule(Schedule::exponential(1e-4), 100000).status == ScheduleStatus::ok);
  CHECK(validate_schedule(Schedule::exponential(0.0), 100000).status == ScheduleStatus::warning);
  const ScheduleCheck c = validate_schedule(Schedule::constant(0.5), 1000);
  CHECK(c.status == ScheduleStatus::warning);
  CHECK(!c.message.empty());
  CHECK(validate_schedule(Schedule::constant(0.0), 1000).status == ScheduleStatus::ok);

  std::vector<double> p_series;
  for (int k = 1; k <= 1000; ++k) p_series.push_back(1.0 / (static_cast<double>(k) * k));
  CHECK(validate_schedule(Schedule::table(p_series), 1000).status == ScheduleStatus::ok);
  CHECK(validate_schedule(Schedule::table(std::vector<double>(1000, 0.5)), 1000).status == ScheduleStatus::warning);
}

TEST_CASE("expected complexity") {
  CHECK(expected_complexity(10.0, 1.0, Schedule::constant(1.0), 100000) == 10.0);
  CHECK(expected_complexity(10.0, 1.0, Schedule::constant(0.0), 100000) == 1.0);
  const Schedule s = Schedule::exponential(1e-4);
  // (1 - e^{-rm}) / (m (1 - e^{-r}))
  const double w = (1.0 - std::exp(-10.0)) / (1e5 * (1.0 - std::exp(-1e-4)));
  CHECK(mean_schedule_weight(s, 100000) == doctest::Approx(w).epsilon(1e-12));
  CHECK(std::abs(w - 0.1) <= 1e-3);
  CHECK(expected_complexity(10.0, 1.0, s, 100000) == doctest::Approx(1.9).epsilon(1e-3));
  double direct = 0.0;
  for (std::size_t k = 0; k < 100000; ++k) direct += schedule_prob(s, k);
  CHECK(mean_schedule_weight(s, 100000) == doctest::Approx(direct / 1e5).epsilon(1e-9));
  CHECK_THROWS_AS(expected_complexity(-1.0, 1.0, s, 10), InvalidParams);
}

TEST_CASE("sampler config") {
  CHECK(sampler_kind_from_string("smmala") == SamplerKind::smmala);
  CHECK_THROWS_AS(sampler_kind_from_string("hmc"), ConfigError);
  SamplerConfig c = sampler(SamplerKind::mala);
  CHECK(c.langevin_target() == 0.574);
  CHECK(sampler(SamplerKind::gamc).langevin_target() == 0.70);
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = sampler(SamplerKind::am);
  c.lambda = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("acceptance controller") {
  AcceptanceController ctl(1.0, 0.5);
  ctl.observe(true);
  CHECK(ctl.value() == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
  ctl.observe(false);
  CHECK(ctl.value() == doctest::Approx(std::exp(0.5 - 0.5 * std::pow(2.0, -0.6))).epsilon(1e-14));
  CHECK(ctl.count() == 2);
  CHECK_THROWS_AS(AcceptanceController(0.0, 0.5), InvalidParams);
}

TEST_CASE("mala smoke run") {
  const auto target = targets::GaussianTarget::standard(1);
  const ChainRecord r = run_chain(sampler(SamplerKind::mala), target, Vector::Zero(1), 100, 0, 3);
  CHECK(r.size() == 100);
  CHECK(r.states.allFinite());
  const auto accepted = std::accumulate(r.accepted.begin(), r.accepted.end(), 0);
  CHECK(accepted >= 1);
  CHECK(accepted <= 100);
  CHECK(r.wall_time >= 0.0);
}

TEST_CASE("runs are deterministic given the seed") {
  const targets::StudentTTarget target(3, 30.0, 0.9);
  for (SamplerKind kind : {SamplerKind::mala, SamplerKind::smmala, SamplerKind::mmala, SamplerKind::am, SamplerKind::gamc}) {
    SamplerConfig c = sampler(kind);
    c.schedule = Schedule::exponential(0.01);
    const ChainRecord a = run_chain(c, target, Vector::Ones(3), 300, 100, 17);
    const ChainRecord b = run_chain(c, target, Vector::Ones(3), 300, 100, 17);
    CHECK(a.states == b.states);
    CHECK(a.log_densities == b.log_densities);
    CHECK(a.accepted == b.accepted);
    CHECK(a.geometric_step == b.geometric_step);
    const ChainRecord other = run_chain(c, target, Vector::Ones(3), 300, 100, 18);
    CHECK(!(a.states == other.states));
  }
}

TEST_CASE("rejected steps repeat the state") {
  const targets::StudentTTarget target(4, 30.0, 0.9);
  for (SamplerKind kind : {SamplerKind::mala, SamplerKind::smmala, SamplerKind::am, SamplerKind::gamc}) {
    SamplerConfig c = sampler(kind);
    c.schedule = Schedule::exponential(0.005);
    const ChainRecord r = run_chain(c, target, Vector::Constant(4, 0.5), 500, 200, 5);
    REQUIRE(r.states.rows() == 700);
    REQUIRE(r.log_densities.size() == 700);
    REQUIRE(r.accepted.size() == 700);
    REQUIRE(r.geometric_step.size() == 700);
    for (Eigen::Index i = 0; i < r.states.rows(); ++i) {
      if (r.accepted[static_cast<std::size_t>(i)]) continue;
      const Vector prev = i == 0 ? r.initial_state : Vector(r.states.row(i - 1).transpose());
      CHECK(Vector(r.states.row(i).transpose()) == prev);
    }
    for (Eigen::Index i = 0; i < r.states.rows(); ++i) {
      CHECK(r.log_densities[static_cast<std::size_t>(i)] == target.log_density(r.states.row(i).transpose()));
    }
  }
}

TEST_CASE("mala tuning reaches its acceptance target") {
  const auto target = targets::GaussianTarget::standard(5);
  const ChainRecord r = run_chain(sampler(SamplerKind::mala), target, Vector::Ones(5), 5000, 2000, 11);
  const double ar = acceptance(r.retained_accepted());
  CHECK(ar >= 0.50);
  CHECK(ar <= 0.65);
  CHECK(r.final_epsilon > 0.0);
}

TEST_CASE("am tuning reaches its acceptance target") {
  const auto target = targets::GaussianTarget::standard(5);
  const ChainRecord r = run_chain(sampler(SamplerKind::am), target, Vector::Ones(5), 5000, 3000, 12);
  const double ar = acceptance(r.retained_accepted());
  CHECK(ar >= 0.15);
  CHECK(ar <= 0.35);
}

TEST_CASE("plain am replays through the kernel functions") {
  const targets::StudentTTarget target(2, 30.0, 0.5);
  SamplerConfig c = sampler(SamplerKind::am);
  c.tune = false;
  const Vector theta0 = Vector::Constant(2, 0.3);
  const ChainRecord r = run_chain(c, target, theta0, 400, 0, 21);

  kernels::AMConfig ac;
  ac.beta = 2.38 * 2.38 / 2.0;
  ac.lambda = c.lambda;
  ac.gamma_fixed = c.gamma_fixed;
  kernels::AMState st = kernels::am_init(theta0, c.gamma_fixed * SymMatrix::Identity(2, 2), ac);
  Rng rng = make_rng(21, 0);
  Vector cur = theta0;
  double logp = target.log_density(cur);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const Vector x = kernels::am_proposal_sample(st, cur, rng);
    const double u = uniform01(rng);
    const double lx = target.log_density(x);
    const bool acc = std::log(u) < kernels::mh_accept_log_ratio(logp, lx, 0.0, 0.0);
    if (acc) {
      cur = x;
      logp = lx;
    }
    // the history absorbs repeated states on rejection
    st = kernels::am_update(std::move(st), cur);
    CHECK(static_cast<bool>(r.accepted[static_cast<std::size_t>(i)]) == acc);
    CHECK(Vector(r.states.row(i).transpose()) == cur);
  }
  CHECK(st.count == 401);
}

TEST_CASE("constant schedule of one reproduces the geometric sampler") {
  const targets::StudentTTarget target(3, 30.0, 0.9);
  for (auto variant : {kernels::LangevinVariant::smmala, kernels::LangevinVariant::mala}) {
    SamplerConfig g = sampler(SamplerKind::gamc);
    g.schedule = Schedule::constant(1.0);
    g.geometric = variant;
    const SamplerConfig pure = sampler(variant == kernels::LangevinVariant::smmala ? SamplerKind::smmala : SamplerKind::mala);
    const ChainRecord a = run_chain(g, target, Vector::Ones(3), 400, 100, 31);
    const ChainRecord b = run_chain(pure, target, Vector::Ones(3), 400, 100, 31);
    CHECK(a.states == b.states);
    CHECK(a.accepted == b.accepted);
    CHECK(a.final_epsilon == b.final_epsilon);
    CHECK(geometric_fraction(a) == 1.0);
    CHECK(a.n_hessian_evals == b.n_hessian_evals);
  }
}

TEST_CASE("constant schedule of zero reproduces plain am") {
  const targets::StudentTTarget target(3, 30.0, 0.9);
  SamplerConfig g = sampler(SamplerKind::gamc);
  g.schedule = Schedule::constant(0.0);
  const ChainRecord a = run_chain(g, target, Vector::Ones(3), 600, 200, 32);
  const ChainRecord b = run_chain(sampler(SamplerKind::am), target, Vector::Ones(3), 600, 200, 32);
  CHECK(a.states == b.states);
  CHECK(a.accepted == b.accepted);
  CHECK(a.final_beta == b.final_beta);
  CHECK(geometric_fraction(a) == 0.0);
  CHECK(a.n_hessian_evals == 0);
}

TEST_CASE("adaptive covariance restarts from the metric inverse") {
  const targets::StudentTTarget target(3, 30.0, 0.9);
  SamplerConfig g = sampler(SamplerKind::gamc);
  g.schedule = Schedule::exponential(0.01);
  RunOptions opts;
  opts.record_reseeds = true;
  const ChainRecord r = run_chain(g, target, Vector::Ones(3), 500, 0, 33, opts);
  std::size_t j = 0;
  for (Eigen::Index i = 0; i < r.states.rows(); ++i) {
    if (!r.geometric_step[static_cast<std::size_t>(i)]) continue;
    REQUIRE(j < r.reseeded_covariances.size());
    const Vector x = r.states.row(i).transpose();
    const SymMatrix inv = kernels::local_geometry(target.derivatives(x, DerivativeOrder::hessian), g.metric).inverse;
    CHECK((r.reseeded_covariances[j] - inv).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + inv.cwiseAbs().maxCoeff()));
    ++j;
  }
  CHECK(j == r.reseeded_covariances.size());
  CHECK(j > 10);
}

TEST_CASE("evaluation counters") {
  const auto gauss = targets::GaussianTarget::standard(3);
  SamplerConfig s = sampler(SamplerKind::smmala);
  const ChainRecord r = run_chain(s, gauss, Vector::Zero(3), 200, 50, 41);
  // initial density, the first bundle at the start, then one bundle per proposal
  CHECK(r.n_hessian_evals == 1 + 250);
  CHECK(r.n_gradient_evals == r.n_hessian_evals);
  CHECK(r.n_target_evals == 2 + 250);

  const ChainRecord a = run_chain(sampler(SamplerKind::am), gauss, Vector::Zero(3), 200, 50, 41);
  CHECK(a.n_target_evals == 1 + 250);
  CHECK(a.n_gradient_evals == 0);

  SamplerConfig g = sampler(SamplerKind::gamc);
  g.schedule = Schedule::exponential(0.02);
  const ChainRecord c = run_chain(g, gauss, Vector::Zero(3), 200, 50, 41);
  const auto geo = static_cast<std::size_t>(std::accumulate(c.geometric_step.begin(), c.geometric_step.end(), 0));
  // a geometric step reuses the bundle at the current point unless the chain
  // moved by an accepted adaptive step since the last geometric step; the
  // proposal always needs one
  std::size_t want = 0;
  bool cached = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.geometric_step[i]) {
      want += cached ? 1 : 2;
      cached = true;
    } else if (c.accepted[i]) {
      cached = false;
    }
  }
  CHECK(c.n_hessian_evals == want);
  CHECK(geo > 5);
  CHECK(c.n_target_evals == 1 + (250 - geo) + c.n_hessian_evals);
}

TEST_CASE("geometric step fraction follows the schedule") {
  const auto target = targets::GaussianTarget::standard(2);
  SamplerConfig g = sampler(SamplerKind::gamc);
  g.schedule = Schedule::exponential(1e-3);
  const double expect = mean_schedule_weight(g.schedule, 10000);
  std::vector<double> fractions;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    fractions.push_back(geometric_fraction(run_chain(g, target, Vector::Zero(2), 10000, 0, 100 + seed)));
  }
  const double mean = std::accumulate(fractions.begin(), fractions.end(), 0.0) / 50.0;
  double var = 0.0;
  for (double f : fractions) var += (f - mean) * (f - mean) / 49.0;
  CHECK(std::abs(mean - expect) <= 3.0 * std::sqrt(var / 50.0));
}

TEST_CASE("ten percent geometric steps at the reference rate") {
  const auto target = targets::GaussianTarget::standard(2);
  SamplerConfig g = sampler(SamplerKind::gamc);
  g.schedule = Schedule::exponential(1e-4);
  double mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    mean += geometric_fraction(run_chain(g, target, Vector::Zero(2), 100000, 0, seed)) / 10.0;
  }
  CHECK(std::abs(mean - 0.1) <= 0.02 * 0.1);
}

TEST_CASE("initial state outside the support is rejected") {
  const targets::RVParams p = targets::RVParams::one_planet_reference();
  targets::RVDataset d;
  d.times = targets::uniform_times(10);
  d.sigmas.assign(10, 2.0);
  for (double t : d.times) d.velocities.push_back(targets::rv_model_velocity(p, t));
  const targets::RVPosteriorTarget target(d, 1);
  Vector bad = p.to_vector();
  bad(3) = 1.5;
  CHECK_THROWS_AS(run_chain(sampler(SamplerKind::am), target, bad, 10, 0, 1), TargetError);
  CHECK_THROWS_AS(run_chain(sampler(SamplerKind::am), target, Vector::Zero(3), 10, 0, 1), DimensionMismatch);
  CHECK_THROWS_AS(run_chain(sampler(SamplerKind::am), target, p.to_vector(), 0, 0, 1), ConfigError);
}
