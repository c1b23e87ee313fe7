#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include "gamc/csv.hpp"
#include "gamc/errors.hpp"
#include "gamc/harness.hpp"
#include "json.hpp"

namespace gamc::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x1717;
constexpr std::uint64_t kDataStream = 0x5eed;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

targets::RVPriorConfig prior_config(const TargetSpec& t) {
  targets::RVPriorConfig p;
  const auto kind = t.prior == "uniform" ? targets::ScalePrior::uniform : targets::ScalePrior::modified_jeffreys;
  p.amplitude_prior = kind;
  p.period_prior = kind;
  return p;
}

}  // namespace

std::string version_string() { return "gamc 0.1.0"; }

std::size_t thread_count_from_env() {
  if (const char* v = std::getenv("GAMC_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

targets::RVParams rv_truth(const TargetSpec& spec) {
  if (!spec.simulation.truth.empty()) {
    const auto& v = spec.simulation.truth;
    return targets::RVParams::from_vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  if (spec.planets == 1) return targets::RVParams::one_planet_reference();
  if (spec.planets == 2) return targets::RVParams::two_planet_reference();
  throw ValidationError("target.simulation.truth", "required for more than two planets");
}

targets::RVModelOptions rv_options(const ExperimentConfig& cfg) {
  targets::RVModelOptions o;
  o.c_additive = cfg.c_additive;
  return o;
}

SimulatedData simulate_rv(const ExperimentConfig& cfg) {
  const auto& sim = cfg.target.simulation;
  SimulatedData out;
  out.truth = rv_truth(cfg.target);
  const auto times = targets::uniform_times(sim.n_obs, sim.span);
  const std::vector<double> sigmas(sim.n_obs, sim.zero_noise ? 0.0 : sim.sigma);
  Rng rng = make_rng(sim.seed ? sim.seed : cfg.base_seed, kDataStream);
  out.data = targets::simulate_rv_dataset(out.truth, times, sigmas, rng, rv_options(cfg), &out.noise);
  out.data.sigmas.assign(sim.n_obs, sim.sigma);
  return out;
}

DatasetFiles simulate_datasets(const ExperimentConfig& cfg, const std::string& dir) {
  if (cfg.target.type != "rv") throw ConfigError("simulate: target is not an rv model");
  const SimulatedData sim = simulate_rv(cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create '" + dir + "': " + ec.message());
  DatasetFiles files{(fs::path(dir) / "dataset.csv").string(), (fs::path(dir) / "dataset_noise.csv").string()};
  targets::write_rv_csv(sim.data, files.dataset);
  csv::Table noise;
  noise.header = {"t", "noise"};
  for (std::size_t i = 0; i < sim.noise.size(); ++i) {
    noise.rows.push_back({csv::format_double(sim.data.times[i]), csv::format_double(sim.noise[i])});
  }
  csv::write(files.noise, noise);
  return files;
}

std::unique_ptr<LogTarget> make_target(const ExperimentConfig& cfg) {
  const auto& t = cfg.target;
  if (t.type == "student_t") return std::make_unique<targets::StudentTTarget>(t.n, t.nu, t.xi);
  if (t.type == "rv") {
    targets::RVDataset data = t.dataset.empty() ? simulate_rv(cfg).data : targets::read_rv_csv(t.dataset);
    return std::make_unique<targets::RVPosteriorTarget>(std::move(data), t.planets, prior_config(t), rv_options(cfg));
  }
  throw ConfigError("unknown target type '" + t.type + "'");
}

Vector initial_state(const ExperimentConfig& cfg, const LogTarget& target, std::uint64_t seed) {
  Rng rng = make_rng(seed, kInitStream);
  const auto n = static_cast<Eigen::Index>(target.dim());
  if (cfg.target.type == "student_t") {
    Vector dir = standard_normal(rng, n);
    dir.normalize();
    return (3.0 + 2.0 * uniform01(rng)) * dir;
  }
  const Vector truth = rv_truth(cfg.target).to_vector();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vector x = truth.cwiseProduct(Vector::Ones(n) + 0.05 * standard_normal(rng, n));
    for (Eigen::Index b = 1; b + 4 < n; b += 5) {
      x(b + 2) = std::clamp(x(b + 2), 0.0, 0.99);
      for (Eigen::Index a : {b + 3, b + 4}) {
        x(a) = std::fmod(x(a), targets::kTwoPi);
        if (x(a) < 0.0) x(a) += targets::kTwoPi;
      }
    }
    if (std::isfinite(target.log_density(x))) return x;
  }
  throw TargetError("initial_state: no start with finite density near the true parameters");
}

std::vector<diagnostics::SamplerSummary> finalize_summaries(std::vector<diagnostics::SamplerSummary> rows,
                                                            const std::string& reference_sampler) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (r.sampler == reference_sampler) {
      total += r.efficiency;
      ++count;
    }
  }
  for (auto& r : rows) {
    r.speedup.reset();
    if (count > 0 && total > 0.0) r.speedup = diagnostics::speedup(r.efficiency, total / static_cast<double>(count));
  }
  return rows;
}

std::string manifest_to_json(const RunManifest& m) {
  json chains = json::array();
  for (const auto& c : m.chains) {
    chains.push_back({{"sampler", c.sampler},
                      {"chain", c.chain},
                      {"seed", c.seed},
                      {"ok", c.ok},
                      {"error", c.error},
                      {"wall_time", c.wall_time},
                      {"final_epsilon", c.final_epsilon},
                      {"final_beta", c.final_beta},
                      {"n_target_evals", c.n_target_evals},
                      {"n_gradient_evals", c.n_gradient_evals},
                      {"n_hessian_evals", c.n_hessian_evals},
                      {"n_metric_failures", c.n_metric_failures},
                      {"geometric_steps", c.geometric_steps},
                      {"trace", c.trace},
                      {"files", c.files}});
  }
  json j{{"version", m.version},
         {"config_hash", m.config_hash},
         {"output_dir", m.output_dir},
         {"summary", m.summary},
         {"dataset", m.dataset},
         {"reference_sampler", m.reference_sampler},
         {"warnings", m.warnings},
         {"config", json::parse(m.config_json.empty() ? "{}" : m.config_json)},
         {"chains", chains}};
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.output_dir = j.at("output_dir").get<std::string>();
    m.summary = j.at("summary").get<std::string>();
    m.dataset = j.at("dataset").get<std::string>();
    m.reference_sampler = j.at("reference_sampler").get<std::string>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    m.config_json = j.at("config").dump(2) + "\n";
    for (const auto& c : j.at("chains")) {
      ChainEntry e;
      e.sampler = c.at("sampler").get<std::string>();
      e.chain = c.at("chain").get<std::size_t>();
      e.seed = c.at("seed").get<std::uint64_t>();
      e.ok = c.at("ok").get<bool>();
      e.error = c.at("error").get<std::string>();
      e.wall_time = c.at("wall_time").get<double>();
      e.final_epsilon = c.at("final_epsilon").get<double>();
      e.final_beta = c.at("final_beta").get<double>();
      e.n_target_evals = c.at("n_target_evals").get<std::size_t>();
      e.n_gradient_evals = c.at("n_gradient_evals").get<std::size_t>();
      e.n_hessian_evals = c.at("n_hessian_evals").get<std::size_t>();
      e.n_metric_failures = c.at("n_metric_failures").get<std::size_t>();
      e.geometric_steps = c.at("geometric_steps").get<std::size_t>();
      e.trace = c.at("trace").get<std::string>();
      e.files = c.at("files").get<std::vector<std::string>>();
      m.chains.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunSettings& settings) {
  validate(cfg);
  const auto target = make_target(cfg);

  RunResult result;
  RunManifest& man = result.manifest;
  man.version = version_string();
  man.config_json = serialize_config(cfg);
  man.config_hash = fnv1a_hex(man.config_json);
  man.output_dir = cfg.output_dir;
  for (const auto& s : cfg.samplers) {
    if (s.kind == "mala") {
      man.reference_sampler = s.name;
      break;
    }
  }

  std::vector<SamplerConfig> sampler_cfgs;
  for (const auto& s : cfg.samplers) {
    sampler_cfgs.push_back(to_sampler_config(s, cfg));
    if (sampler_cfgs.back().kind == SamplerKind::gamc) {
      const ScheduleCheck check = validate_schedule(sampler_cfgs.back().schedule, cfg.iterations + cfg.burn_in);
      if (check.status == ScheduleStatus::warning) man.warnings.push_back(s.name + ": " + check.message);
    }
  }

  const fs::path dir(cfg.output_dir);
  if (settings.write_files) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IOError("cannot create '" + cfg.output_dir + "': " + ec.message());
    if (cfg.target.type == "rv" && cfg.target.dataset.empty()) {
      simulate_datasets(cfg, cfg.output_dir);
      man.dataset = "dataset.csv";
    } else {
      man.dataset = cfg.target.dataset;
    }
    csv::write_text((dir / "config.json").string(), man.config_json);
  }

  const std::size_t tasks = cfg.samplers.size() * cfg.chains;
  man.chains.resize(tasks);
  std::vector<std::optional<diagnostics::SamplerSummary>> raw(tasks);
  std::vector<std::optional<ChainRecord>> records(tasks);

  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t si = t / cfg.chains;
      const std::size_t c = t % cfg.chains;
      const SamplerSpec& spec = cfg.samplers[si];
      ChainEntry& e = man.chains[t];
      e.sampler = spec.name;
      e.chain = c;
      e.seed = cfg.base_seed + c;
      try {
        const Vector theta0 = initial_state(cfg, *target, e.seed);
        ChainRecord rec = run_chain(sampler_cfgs[si], *target, theta0, cfg.iterations, cfg.burn_in, e.seed);
        e.wall_time = rec.wall_time;
        e.final_epsilon = rec.final_epsilon;
        e.final_beta = rec.final_beta;
        e.n_target_evals = rec.n_target_evals;
        e.n_gradient_evals = rec.n_gradient_evals;
        e.n_hessian_evals = rec.n_hessian_evals;
        e.n_metric_failures = rec.n_metric_failures;
        e.geometric_steps = static_cast<std::size_t>(std::count(rec.geometric_step.begin(), rec.geometric_step.end(), char{1}));
        if (settings.write_files) {
          const std::string stem = spec.name + "_" + std::to_string(c) + ".csv";
          const Matrix kept = rec.retained_states();
          if (cfg.write_traces) {
            e.trace = "trace_" + stem;
            csv::write((dir / e.trace).string(), diagnostics::trace_table(rec));
            e.files.push_back(e.trace);
          }
          if (kept.rows() > 1) {
            csv::write((dir / ("acf_" + stem)).string(), diagnostics::acf_table(kept, cfg.acf_max_lag));
            e.files.push_back("acf_" + stem);
          }
          csv::write((dir / ("runmean_" + stem)).string(), diagnostics::runmean_table(kept));
          e.files.push_back("runmean_" + stem);
        }
        raw[t] = diagnostics::summarize(rec, c);
        e.ok = true;
        if (settings.keep_records) records[t] = std::move(rec);
      } catch (const std::exception& ex) {
        e.ok = false;
        e.error = ex.what();
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(settings.threads ? settings.threads : thread_count_from_env(), tasks));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<diagnostics::SamplerSummary> rows;
  for (std::size_t t = 0; t < tasks; ++t) {
    if (raw[t]) rows.push_back(*raw[t]);
    if (records[t]) result.records.push_back(std::move(*records[t]));
  }
  result.summaries = finalize_summaries(std::move(rows), man.reference_sampler);

  if (settings.write_files) {
    man.summary = "summary.csv";
    csv::write((dir / man.summary).string(), diagnostics::summary_table(result.summaries));
    csv::write_text((dir / "manifest.json").string(), manifest_to_json(man));
  }
  return result;
}

std::vector<diagnostics::SamplerSummary> summarize_directory(const std::string& dir) {
  const fs::path root(dir);
  const RunManifest man = manifest_from_json(csv::read_text((root / "manifest.json").string()));
  std::vector<diagnostics::SamplerSummary> rows;
  for (const auto& e : man.chains) {
    if (!e.ok) continue;
    if (e.trace.empty()) throw IOError("summarize: chain " + e.sampler + "/" + std::to_string(e.chain) + " has no trace");
    const diagnostics::TraceData d = diagnostics::parse_trace(csv::read((root / e.trace).string()));
    rows.push_back(diagnostics::summarize_states(e.sampler, e.chain, d.states, d.accepted, e.wall_time));
  }
  return finalize_summaries(std::move(rows), man.reference_sampler);
}

}  // namespace gamc::harness
