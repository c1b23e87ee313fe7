// gamc: run sampler experiments, simulate RV datasets, recompute summaries
// and print per-step complexity bounds.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gamc/csv.hpp"
#include "gamc/diagnostics.hpp"
#include "gamc/errors.hpp"
#include "gamc/harness.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gamc;

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

harness::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed, bool paper_scale,
                               const std::string& output) {
  if (!fs::is_regular_file(path)) throw UsageError("config file '" + path + "' not found");
  harness::ExperimentConfig cfg;
  try {
    cfg = harness::load_config(path);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (seed) cfg.base_seed = *seed;
  if (paper_scale) harness::apply_paper_scale(cfg);
  if (!output.empty()) cfg.output_dir = output;
  return cfg;
}

int run_cmd(const std::string& path, std::optional<std::uint64_t> seed, bool paper_scale, const std::string& output,
            std::size_t threads) {
  const auto cfg = load(path, seed, paper_scale, output);
  harness::RunSettings settings;
  settings.threads = threads;
  const auto result = harness::run_experiment(cfg, settings);
  for (const auto& w : result.manifest.warnings) std::cerr << "warning: " << w << "\n";
  std::size_t failed = 0;
  for (const auto& c : result.manifest.chains) {
    if (!c.ok) {
      ++failed;
      std::cerr << "chain " << c.sampler << "/" << c.chain << " failed: " << c.error << "\n";
    }
  }
  std::cout << "wrote " << (fs::path(cfg.output_dir) / "summary.csv").string() << " ("
            << result.summaries.size() << " chains";
  if (failed) std::cout << ", " << failed << " failed";
  std::cout << ")\n";
  return failed == result.manifest.chains.size() ? kRuntimeError : 0;
}

int simulate_cmd(const std::string& path, std::optional<std::uint64_t> seed, const std::string& output) {
  const auto cfg = load(path, seed, false, output);
  const auto files = harness::simulate_datasets(cfg, cfg.output_dir);
  std::cout << files.dataset << "\n" << files.noise << "\n";
  return 0;
}

int summarize_cmd(const std::string& dir, const std::string& output) {
  if (!fs::is_directory(dir)) throw UsageError("directory '" + dir + "' not found");
  const auto rows = harness::summarize_directory(dir);
  const auto table = diagnostics::summary_table(rows);
  if (output == "-") {
    for (std::size_t i = 0; i < table.header.size(); ++i) std::cout << (i ? "," : "") << table.header[i];
    std::cout << "\n";
    for (const auto& r : table.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) std::cout << (i ? "," : "") << r[i];
      std::cout << "\n";
    }
    return 0;
  }
  const std::string out = output.empty() ? (fs::path(dir) / "summary.csv").string() : output;
  csv::write(out, table);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric adaptive Monte Carlo experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", harness::version_string());

  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::string config_path, output, dir;
  std::size_t threads = 0;
  std::size_t n = 0;
  double f = 1.0;

  auto* run = app.add_subcommand("run", "run every sampler and chain in a config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--seed", seed, "override base_seed");
  run->add_flag("--paper-scale", paper_scale, "use 1e5 iterations after 1e4 burn-in");
  run->add_option("-o,--output", output, "override output_dir");
  run->add_option("--threads", threads, "worker threads (default GAMC_THREADS or all cores)");

  auto* sim = app.add_subcommand("simulate", "write the RV dataset and injected noise of a config");
  sim->add_option("config", config_path, "experiment config (JSON)")->required();
  sim->add_option("--seed", seed, "override base_seed");
  sim->add_option("-o,--output", output, "override output_dir");

  auto* summ = app.add_subcommand("summarize", "recompute summary.csv from a run directory");
  summ->add_option("dir", dir, "run directory")->required();
  summ->add_option("-o,--output", output, "output file ('-' for stdout; default <dir>/summary.csv)");

  auto* cx = app.add_subcommand("complexity", "print per-step complexity bounds");
  cx->add_option("--n", n, "dimension")->required()->check(CLI::PositiveNumber);
  cx->add_option("--f", f, "target cost in the expensive regime")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) return run_cmd(config_path, seed, paper_scale, output, threads);
    if (*sim) return simulate_cmd(config_path, seed, output);
    if (*summ) return summarize_cmd(dir, output);
    if (*cx) {
      std::cout << diagnostics::format_complexity_table(diagnostics::complexity_table(n, f), n, f);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
