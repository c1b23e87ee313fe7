#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gamc/csv.hpp"
#include "gamc/errors.hpp"
#include "gamc/harness.hpp"

using namespace gamc;
using namespace gamc::harness;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gamc_test_harness_" + name);
  fs::remove_all(p);
  return p.string();
}

ExperimentConfig small_config(const std::string& dir) {
  ExperimentConfig cfg = parse_config(R"({
    "target": {"type": "student_t", "n": 3},
    "samplers": ["mala", {"name": "gamc_fast", "kind": "gamc", "schedule": {"r": 0.01}}],
    "chains": 2, "iterations": 200, "burn_in": 50, "base_seed": 7
  })");
  cfg.output_dir = dir;
  return cfg;
}

}  // namespace

TEST_CASE("config defaults") {
  const ExperimentConfig cfg = parse_config(R"({"samplers": ["gamc"]})");
  REQUIRE(cfg.samplers.size() == 1);
  const SamplerSpec& s = cfg.samplers[0];
  CHECK(s.name == "gamc");
  CHECK(s.lambda == 0.01);
  CHECK(s.gamma_fixed == 0.001);
  CHECK(s.schedule.family == "exponential");
  CHECK(s.schedule.r == 1e-4);
  CHECK(cfg.target.type == "student_t");
  CHECK(cfg.target.n == 20);
  CHECK(cfg.target.nu == 30.0);
  CHECK(cfg.target.xi == 0.9);
  CHECK(cfg.chains == 10);
  CHECK(cfg.iterations == 10000);
  CHECK(cfg.burn_in == 1000);
  CHECK(cfg.target.simulation.n_obs == 50);
  CHECK(cfg.target.simulation.sigma == 2.0);

  ExperimentConfig paper = cfg;
  apply_paper_scale(paper);
  CHECK(paper.iterations == 100000);
  CHECK(paper.burn_in == 10000);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config(R"({"samplers": []})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"samplers": ["gamc"],)"), ParseError);
  try {
    parse_config(R"({"samplers": [{"kind": "am", "lambda": 1.5}]})");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "samplers[0].lambda");
  }
  try {
    parse_config(R"({"samplers": ["gamc"], "chainz": 3})");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "chainz");
  }
  CHECK_THROWS_AS(parse_config(R"({"samplers": ["gamc"], "chains": "ten"})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"samplers": ["gamc", "gamc"]})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"samplers": ["nuts"]})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"samplers": ["gamc"], "iterations": 0})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"samplers": [{"kind": "gamc", "schedule": {"r": 0}}]})"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/gamc.json"), IOError);
}

TEST_CASE("config round trip") {
  const ExperimentConfig cfg = parse_config(R"({
    "target": {"type": "rv", "planets": 1, "simulation": {"zero_noise": true, "seed": 9}},
    "samplers": [{"name": "g", "kind": "gamc", "epsilon": 0.3, "beta": 0.5,
                  "schedule": {"family": "table", "table": [1, 0.5, 0.25]}}, "am"],
    "chains": 3, "iterations": 500, "burn_in": 20, "base_seed": 11, "c_additive": true
  })");
  const ExperimentConfig back = parse_config(serialize_config(cfg));
  CHECK(back == cfg);
  CHECK(serialize_config(back) == serialize_config(cfg));
  const std::string dir = scratch("roundtrip");
  fs::create_directories(dir);
  csv::write_text(dir + "/c.json", serialize_config(cfg));
  CHECK(load_config(dir + "/c.json") == cfg);
  fs::remove_all(dir);
}

TEST_CASE("sampler specs map onto sampler configs") {
  const ExperimentConfig cfg = parse_config(R"({
    "samplers": [{"name": "g", "kind": "gamc", "geometric": "mmala", "alpha": 50, "softabs": false,
                  "schedule": {"family": "constant", "value": 0.2}}],
    "force_refactorization": true
  })");
  const SamplerConfig s = to_sampler_config(cfg.samplers[0], cfg);
  CHECK(s.kind == SamplerKind::gamc);
  CHECK(s.geometric == kernels::LangevinVariant::mmala);
  CHECK(s.metric.alpha == 50.0);
  CHECK(!s.metric.softabs);
  CHECK(s.force_refactorization);
  CHECK(s.schedule.family == Schedule::Family::constant);
  CHECK(schedule_prob(s.schedule, 10) == 0.2);
  CHECK(s.reseed_weight == ReseedWeight::iteration);

  const ExperimentConfig w = parse_config(R"({"samplers": [{"kind": "gamc", "reseed_weight": "window"}]})");
  CHECK(to_sampler_config(w.samplers[0], w).reseed_weight == ReseedWeight::window);
  CHECK_THROWS_WITH(parse_config(R"({"samplers": [{"kind": "gamc", "reseed_weight": "all"}]})"),
                    doctest::Contains("samplers[0].reseed_weight"));
}

TEST_CASE("initial states") {
  ExperimentConfig cfg = parse_config(R"({"target": {"n": 5}, "samplers": ["mala"]})");
  const auto t = make_target(cfg);
  CHECK(t->dim() == 5);
  for (std::uint64_t seed = 1; seed < 30; ++seed) {
    const Vector x = initial_state(cfg, *t, seed);
    CHECK(x.norm() >= 3.0);
    CHECK(x.norm() <= 5.0);
    CHECK(x == initial_state(cfg, *t, seed));
  }
  CHECK(!(initial_state(cfg, *t, 1) == initial_state(cfg, *t, 2)));

  ExperimentConfig rv = parse_config(R"({"target": {"type": "rv"}, "samplers": ["am"]})");
  const auto rt = make_target(rv);
  const Vector truth = rv_truth(rv.target).to_vector();
  for (std::uint64_t seed = 1; seed < 30; ++seed) {
    const Vector x = initial_state(rv, *rt, seed);
    CHECK(rt->in_support(x));
    CHECK(std::isfinite(rt->log_density(x)));
    CHECK(std::abs(x(1) / truth(1) - 1.0) <= 0.5);
  }
}

TEST_CASE("dataset simulation") {
  ExperimentConfig cfg = parse_config(R"({"target": {"type": "rv"}, "samplers": ["am"]})");
  const SimulatedData s = simulate_rv(cfg);
  CHECK(s.data.size() == 50);
  for (double sg : s.data.sigmas) CHECK(sg == 2.0);
  CHECK(s.truth.planets[0].amplitude == 20.0);
  CHECK(s.truth.planets[0].period == 50.0);
  const std::string dir = scratch("simulate");
  const DatasetFiles f = simulate_datasets(cfg, dir);
  const targets::RVDataset d = targets::read_rv_csv(f.dataset);
  CHECK(d.velocities == s.data.velocities);
  const csv::Table noise = csv::read(f.noise);
  REQUIRE(noise.rows.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(csv::parse_double(noise.rows[i][noise.column("noise")]) == s.noise[i]);
  }
  fs::remove_all(dir);

  cfg.target.simulation.zero_noise = true;
  const SimulatedData clean = simulate_rv(cfg);
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    CHECK(clean.data.velocities[i] == targets::rv_model_velocity(clean.truth, clean.data.times[i]));
    CHECK(clean.data.sigmas[i] == 2.0);
  }

  ExperimentConfig two = parse_config(R"({"target": {"type": "rv", "planets": 2}, "samplers": ["am"]})");
  CHECK(rv_truth(two.target).dim() == 11);
  CHECK(rv_truth(two.target).planets[0].amplitude == 30.0);
}

TEST_CASE("experiment bookkeeping") {
  const std::string dir = scratch("bookkeeping");
  const ExperimentConfig cfg = small_config(dir);
  RunSettings settings;
  settings.threads = 2;
  const RunResult r = run_experiment(cfg, settings);
  CHECK(r.summaries.size() == 4);
  CHECK(r.manifest.chains.size() == 4);
  CHECK(r.manifest.reference_sampler == "mala");
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().rfind("trace_", 0) == 0) ++traces;
  }
  CHECK(traces == 4);
  CHECK(fs::exists(fs::path(dir) / "summary.csv"));
  CHECK(fs::exists(fs::path(dir) / "manifest.json"));
  CHECK(fs::exists(fs::path(dir) / "config.json"));
  CHECK(fs::exists(fs::path(dir) / "acf_gamc_fast_1.csv"));
  CHECK(fs::exists(fs::path(dir) / "runmean_mala_0.csv"));
  const csv::Table summary = csv::read((fs::path(dir) / "summary.csv").string());
  CHECK(summary.rows.size() == 4);

  for (const auto& e : r.manifest.chains) {
    CHECK(e.ok);
    CHECK(e.seed == 7 + e.chain);
    CHECK(csv::read((fs::path(dir) / e.trace).string()).rows.size() == 200);
  }
  // speed-ups against the mean reference efficiency
  double ref = 0.0;
  for (const auto& s : r.summaries) {
    if (s.sampler == "mala") ref += s.efficiency / 2.0;
  }
  for (const auto& s : r.summaries) {
    REQUIRE(s.speedup);
    CHECK(*s.speedup == doctest::Approx(s.efficiency / ref).epsilon(1e-12));
  }

  const RunManifest back = manifest_from_json(csv::read_text((fs::path(dir) / "manifest.json").string()));
  CHECK(back.config_hash == r.manifest.config_hash);
  CHECK(parse_config(back.config_json) == cfg);
  CHECK(back.chains.size() == 4);
  CHECK(back.chains[3].n_hessian_evals == r.manifest.chains[3].n_hessian_evals);

  // recomputing from the trace files reproduces summary.csv byte for byte
  const std::string again = (fs::path(dir) / "again.csv").string();
  csv::write(again, diagnostics::summary_table(summarize_directory(dir)));
  CHECK(csv::read_text(again) == csv::read_text((fs::path(dir) / "summary.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("experiments are deterministic across thread counts") {
  const std::string a = scratch("threads_a"), b = scratch("threads_b");
  RunSettings one, three;
  one.threads = 1;
  three.threads = 3;
  run_experiment(small_config(a), one);
  run_experiment(small_config(b), three);
  for (const auto& e : fs::directory_iterator(a)) {
    const std::string name = e.path().filename().string();
    if (name == "summary.csv" || name == "manifest.json" || name == "config.json") continue;
    CHECK_MESSAGE(csv::read_text(e.path().string()) == csv::read_text((fs::path(b) / name).string()), name);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("adding a sampler leaves the other chains unchanged") {
  ExperimentConfig base = small_config(scratch("isolation"));
  ExperimentConfig more = base;
  SamplerSpec extra;
  extra.name = "plain";
  extra.kind = "am";
  more.samplers.insert(more.samplers.begin(), extra);
  RunSettings s;
  s.write_files = false;
  s.keep_records = true;
  const RunResult a = run_experiment(base, s);
  const RunResult b = run_experiment(more, s);
  REQUIRE(a.records.size() == 4);
  REQUIRE(b.records.size() == 6);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.records[i].states == b.records[i + 2].states);
    CHECK(a.summaries[i].ess.per_coordinate == b.summaries[i + 2].ess.per_coordinate);
  }
}

TEST_CASE("rv experiment runs end to end") {
  const std::string dir = scratch("rv");
  ExperimentConfig cfg = parse_config(R"({
    "target": {"type": "rv"}, "samplers": ["gamc", "am"],
    "chains": 1, "iterations": 300, "burn_in": 100
  })");
  cfg.output_dir = dir;
  const RunResult r = run_experiment(cfg);
  CHECK(r.summaries.size() == 2);
  CHECK(fs::exists(fs::path(dir) / "dataset.csv"));
  CHECK(r.manifest.dataset == "dataset.csv");
  CHECK(r.manifest.reference_sampler.empty());
  for (const auto& s : r.summaries) CHECK(!s.speedup);
  fs::remove_all(dir);
}

TEST_CASE("thread count from the environment") {
  CHECK(thread_count_from_env() >= 1);
  CHECK(!version_string().empty());
}
