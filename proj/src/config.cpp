#include <set>

#include "gamc/csv.hpp"
#include "gamc/errors.hpp"
#include "gamc/harness.hpp"
#include "json.hpp"

namespace gamc::harness {

using json = nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ValidationError(path + item.key(), "unknown key");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(path + key, "wrong type");
  }
}

void read_count(const json& j, const char* key, std::size_t& out, const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(path + key, "expected an integer");
  const auto x = v.get<long long>();
  if (x < 0) throw ValidationError(path + key, "must be non-negative");
  out = static_cast<std::size_t>(x);
}

void read_seed(const json& j, const char* key, std::uint64_t& out, const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(path + key, "expected an integer");
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
    return;
  }
  const auto x = v.get<long long>();
  if (x < 0) throw ValidationError(path + key, "must be non-negative");
  out = static_cast<std::uint64_t>(x);
}

void read_optional(const json& j, const char* key, std::optional<double>& out, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  if (!j.at(key).is_number()) throw ValidationError(path + key, "expected a number");
  out = j.at(key).get<double>();
}

ScheduleSpec parse_schedule(const json& j, const std::string& path) {
  ScheduleSpec s;
  check_keys(j, path, {"family", "r", "value", "table", "tail_threshold"});
  read(j, "family", s.family, path);
  read(j, "r", s.r, path);
  read(j, "value", s.value, path);
  read(j, "table", s.table, path);
  read(j, "tail_threshold", s.tail_threshold, path);
  return s;
}

SamplerSpec parse_sampler(const json& j, const std::string& path) {
  SamplerSpec s;
  if (j.is_string()) {
    s.kind = j.get<std::string>();
    s.name = s.kind;
    return s;
  }
  check_keys(j, path,
             {"name", "kind", "epsilon", "target_accept", "am_target_accept", "beta", "lambda", "gamma_fixed",
              "softabs", "alpha", "tune", "geometric", "reseed_weight", "schedule"});
  read(j, "kind", s.kind, path);
  s.name = s.kind;
  read(j, "name", s.name, path);
  read(j, "epsilon", s.epsilon, path);
  read_optional(j, "target_accept", s.target_accept, path);
  read(j, "am_target_accept", s.am_target_accept, path);
  read_optional(j, "beta", s.beta, path);
  read(j, "lambda", s.lambda, path);
  read(j, "gamma_fixed", s.gamma_fixed, path);
  read(j, "softabs", s.softabs, path);
  read(j, "alpha", s.alpha, path);
  read(j, "tune", s.tune, path);
  read(j, "geometric", s.geometric, path);
  read(j, "reseed_weight", s.reseed_weight, path);
  if (j.contains("schedule")) s.schedule = parse_schedule(j.at("schedule"), path + "schedule.");
  return s;
}

TargetSpec parse_target(const json& j) {
  const std::string path = "target.";
  TargetSpec t;
  check_keys(j, path, {"type", "n", "nu", "xi", "planets", "dataset", "prior", "simulation"});
  read(j, "type", t.type, path);
  read_count(j, "n", t.n, path);
  read(j, "nu", t.nu, path);
  read(j, "xi", t.xi, path);
  read_count(j, "planets", t.planets, path);
  read(j, "dataset", t.dataset, path);
  read(j, "prior", t.prior, path);
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    const std::string sp = path + "simulation.";
    check_keys(s, sp, {"n_obs", "span", "sigma", "zero_noise", "seed", "truth"});
    read_count(s, "n_obs", t.simulation.n_obs, sp);
    read(s, "span", t.simulation.span, sp);
    read(s, "sigma", t.simulation.sigma, sp);
    read(s, "zero_noise", t.simulation.zero_noise, sp);
    read_seed(s, "seed", t.simulation.seed, sp);
    read(s, "truth", t.simulation.truth, sp);
  }
  return t;
}

void validate_sampler(const SamplerSpec& s, const std::string& p) {
  static const std::set<std::string> kinds{"mala", "smmala", "mmala", "am", "gamc"};
  static const std::set<std::string> geometric{"mala", "smmala", "mmala"};
  if (!kinds.count(s.kind)) throw ValidationError(p + "kind", "unknown sampler '" + s.kind + "'");
  if (s.name.empty()) throw ValidationError(p + "name", "must not be empty");
  if (s.name.find_first_of(",/\\ ") != std::string::npos) throw ValidationError(p + "name", "invalid character");
  if (!(s.epsilon > 0.0)) throw ValidationError(p + "epsilon", "must be positive");
  if (s.target_accept && !(*s.target_accept > 0.0 && *s.target_accept < 1.0)) {
    throw ValidationError(p + "target_accept", "must lie in (0,1)");
  }
  if (!(s.am_target_accept > 0.0 && s.am_target_accept < 1.0)) {
    throw ValidationError(p + "am_target_accept", "must lie in (0,1)");
  }
  if (s.beta && !(*s.beta > 0.0)) throw ValidationError(p + "beta", "must be positive");
  if (!(s.lambda > 0.0 && s.lambda < 1.0)) throw ValidationError(p + "lambda", "must lie in (0,1)");
  if (!(s.gamma_fixed > 0.0)) throw ValidationError(p + "gamma_fixed", "must be positive");
  if (!(s.alpha > 0.0)) throw ValidationError(p + "alpha", "must be positive");
  if (!geometric.count(s.geometric)) throw ValidationError(p + "geometric", "unknown kernel '" + s.geometric + "'");
  if (s.reseed_weight != "iteration" && s.reseed_weight != "window") {
    throw ValidationError(p + "reseed_weight", "must be 'iteration' or 'window'");
  }
  const auto& sc = s.schedule;
  const std::string sp = p + "schedule.";
  if (sc.family == "exponential") {
    if (!(sc.r > 0.0)) throw ValidationError(sp + "r", "must be positive");
  } else if (sc.family == "constant") {
    if (!(sc.value >= 0.0 && sc.value <= 1.0)) throw ValidationError(sp + "value", "must lie in [0,1]");
  } else if (sc.family == "table") {
    if (sc.table.empty()) throw ValidationError(sp + "table", "must not be empty");
    for (double v : sc.table) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(sp + "table", "entries must lie in [0,1]");
    }
  } else {
    throw ValidationError(sp + "family", "unknown family '" + sc.family + "'");
  }
}

json schedule_json(const ScheduleSpec& s) {
  return json{{"family", s.family}, {"r", s.r}, {"value", s.value}, {"table", s.table},
              {"tail_threshold", s.tail_threshold}};
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto& t = cfg.target;
  if (t.type == "student_t") {
    if (t.n == 0) throw ValidationError("target.n", "must be positive");
    if (!(t.nu > 2.0)) throw ValidationError("target.nu", "must exceed 2");
    if (!(t.xi > 0.0 && t.xi < 1.0)) throw ValidationError("target.xi", "must lie in (0,1)");
  } else if (t.type == "rv") {
    if (t.planets == 0) throw ValidationError("target.planets", "must be positive");
    if (t.prior != "modified_jeffreys" && t.prior != "uniform") {
      throw ValidationError("target.prior", "unknown prior '" + t.prior + "'");
    }
    if (t.simulation.n_obs == 0) throw ValidationError("target.simulation.n_obs", "must be positive");
    if (!(t.simulation.span >= 0.0)) throw ValidationError("target.simulation.span", "must be non-negative");
    if (!(t.simulation.sigma > 0.0)) throw ValidationError("target.simulation.sigma", "must be positive");
    if (!t.simulation.truth.empty() && t.simulation.truth.size() != 5 * t.planets + 1) {
      throw ValidationError("target.simulation.truth", "length must be 5 * planets + 1");
    }
  } else {
    throw ValidationError("target.type", "unknown target '" + t.type + "'");
  }
  if (cfg.samplers.empty()) throw ValidationError("samplers", "at least one sampler is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.samplers.size(); ++i) {
    const std::string p = "samplers[" + std::to_string(i) + "].";
    validate_sampler(cfg.samplers[i], p);
    if (!names.insert(cfg.samplers[i].name).second) throw ValidationError(p + "name", "duplicate sampler name");
  }
  if (cfg.chains == 0) throw ValidationError("chains", "must be at least 1");
  if (cfg.iterations == 0) throw ValidationError("iterations", "must be positive");
  if (cfg.output_dir.empty()) throw ValidationError("output_dir", "must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  check_keys(j, "",
             {"target", "samplers", "chains", "iterations", "burn_in", "base_seed", "output_dir",
              "force_refactorization", "c_additive", "acf_max_lag", "write_traces"});
  ExperimentConfig cfg;
  if (j.contains("target")) cfg.target = parse_target(j.at("target"));
  if (j.contains("samplers")) {
    const json& s = j.at("samplers");
    if (!s.is_array()) throw ValidationError("samplers", "expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      cfg.samplers.push_back(parse_sampler(s[i], "samplers[" + std::to_string(i) + "]."));
    }
  }
  read_count(j, "chains", cfg.chains, "");
  read_count(j, "iterations", cfg.iterations, "");
  read_count(j, "burn_in", cfg.burn_in, "");
  read_seed(j, "base_seed", cfg.base_seed, "");
  read(j, "output_dir", cfg.output_dir, "");
  read(j, "force_refactorization", cfg.force_refactorization, "");
  read(j, "c_additive", cfg.c_additive, "");
  read_count(j, "acf_max_lag", cfg.acf_max_lag, "");
  read(j, "write_traces", cfg.write_traces, "");
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(csv::read_text(path)); }

std::string serialize_config(const ExperimentConfig& cfg) {
  const auto& t = cfg.target;
  json target{{"type", t.type},       {"n", t.n},
              {"nu", t.nu},           {"xi", t.xi},
              {"planets", t.planets}, {"dataset", t.dataset},
              {"prior", t.prior},     {"simulation",
                                       {{"n_obs", t.simulation.n_obs},
                                        {"span", t.simulation.span},
                                        {"sigma", t.simulation.sigma},
                                        {"zero_noise", t.simulation.zero_noise},
                                        {"seed", t.simulation.seed},
                                        {"truth", t.simulation.truth}}}};
  json samplers = json::array();
  for (const auto& s : cfg.samplers) {
    json js{{"name", s.name},
            {"kind", s.kind},
            {"epsilon", s.epsilon},
            {"am_target_accept", s.am_target_accept},
            {"lambda", s.lambda},
            {"gamma_fixed", s.gamma_fixed},
            {"softabs", s.softabs},
            {"alpha", s.alpha},
            {"tune", s.tune},
            {"geometric", s.geometric},
            {"reseed_weight", s.reseed_weight},
            {"schedule", schedule_json(s.schedule)}};
    js["target_accept"] = s.target_accept ? json(*s.target_accept) : json(nullptr);
    js["beta"] = s.beta ? json(*s.beta) : json(nullptr);
    samplers.push_back(std::move(js));
  }
  json j{{"target", target},
         {"samplers", samplers},
         {"chains", cfg.chains},
         {"iterations", cfg.iterations},
         {"burn_in", cfg.burn_in},
         {"base_seed", cfg.base_seed},
         {"output_dir", cfg.output_dir},
         {"force_refactorization", cfg.force_refactorization},
         {"c_additive", cfg.c_additive},
         {"acf_max_lag", cfg.acf_max_lag},
         {"write_traces", cfg.write_traces}};
  return j.dump(2) + "\n";
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.iterations = 100000;
  cfg.burn_in = 10000;
}

SamplerConfig to_sampler_config(const SamplerSpec& spec, const ExperimentConfig& cfg) {
  SamplerConfig c;
  c.name = spec.name;
  c.kind = sampler_kind_from_string(spec.kind);
  c.epsilon = spec.epsilon;
  c.target_accept = spec.target_accept;
  c.am_target_accept = spec.am_target_accept;
  c.tune = spec.tune;
  c.beta = spec.beta;
  c.lambda = spec.lambda;
  c.gamma_fixed = spec.gamma_fixed;
  c.force_refactorization = cfg.force_refactorization;
  c.metric.softabs = spec.softabs;
  c.metric.alpha = spec.alpha;
  const auto& s = spec.schedule;
  if (s.family == "exponential") {
    c.schedule = Schedule::exponential(s.r);
  } else if (s.family == "constant") {
    c.schedule = Schedule::constant(s.value);
  } else {
    c.schedule = Schedule::table(s.table);
  }
  c.schedule.tail_threshold = s.tail_threshold;
  c.geometric = spec.geometric == "mala"     ? kernels::LangevinVariant::mala
                : spec.geometric == "mmala" ? kernels::LangevinVariant::mmala
                                            : kernels::LangevinVariant::smmala;
  c.reseed_weight = spec.reseed_weight == "window" ? ReseedWeight::window : ReseedWeight::iteration;
  return c;
}

}  // namespace gamc::harness
