#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "gamc/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gamc_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Result run(const std::string& args, const fs::path& dir) {
  const std::string out = (dir / "stdout.txt").string(), err = (dir / "stderr.txt").string();
  const std::string cmd = std::string("\"") + GAMC_CLI_PATH + "\" " + args + " >\"" + out + "\" 2>\"" + err + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = gamc::csv::read_text(out);
  r.err = gamc::csv::read_text(err);
  return r;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  const fs::path dir = scratch("usage");
  Result r = run("run /nonexistent/config.json", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("not found") != std::string::npos);
  CHECK(run("", dir).code == 2);
  CHECK(run("frobnicate", dir).code == 2);
  CHECK(run("complexity", dir).code == 2);

  gamc::csv::write_text((dir / "bad.json").string(), R"({"samplers": [], "chains": 1})");
  r = run("run \"" + (dir / "bad.json").string() + "\"", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("samplers") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("complexity prints the per-step bounds") {
  const fs::path dir = scratch("complexity");
  const Result r = run("complexity --n 20", dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("MALA") != std::string::npos);
  CHECK(r.out.find("n^2 = 400") != std::string::npos);
  CHECK(r.out.find("n^3 = 8000") != std::string::npos);
  CHECK(r.out.find("n^2.373") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("run then summarize reproduces summary.csv") {
  const fs::path dir = scratch("run");
  const fs::path cfg = dir / "config.json";
  gamc::csv::write_text(cfg.string(), R"({
    "target": {"type": "student_t", "n": 3},
    "samplers": ["mala", "gamc"],
    "chains": 2, "iterations": 300, "burn_in": 50
  })");
  const fs::path out = dir / "out";
  Result r = run("run \"" + cfg.string() + "\" --seed 5 --threads 2 -o \"" + out.string() + "\"", dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "trace_gamc_1.csv"));
  const std::string original = gamc::csv::read_text((out / "summary.csv").string());

  const fs::path again = dir / "again.csv";
  r = run("summarize \"" + out.string() + "\" -o \"" + again.string() + "\"", dir);
  REQUIRE(r.code == 0);
  CHECK(gamc::csv::read_text(again.string()) == original);

  r = run("summarize \"" + out.string() + "\" -o -", dir);
  CHECK(r.code == 0);
  CHECK(r.out == original);

  // in place
  r = run("summarize \"" + out.string() + "\"", dir);
  CHECK(r.code == 0);
  CHECK(gamc::csv::read_text((out / "summary.csv").string()) == original);

  CHECK(run("summarize \"" + (dir / "missing").string() + "\"", dir).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("simulate writes the dataset and its noise") {
  const fs::path dir = scratch("simulate");
  const fs::path cfg = dir / "config.json";
  gamc::csv::write_text(cfg.string(), R"({"target": {"type": "rv"}, "samplers": ["gamc"]})");
  const Result r = run("simulate \"" + cfg.string() + "\" -o \"" + (dir / "data").string() + "\"", dir);
  REQUIRE(r.code == 0);
  const gamc::csv::Table t = gamc::csv::read((dir / "data" / "dataset.csv").string());
  CHECK(t.header == std::vector<std::string>{"t", "v", "sigma"});
  CHECK(t.rows.size() == 50);
  CHECK(fs::exists(dir / "data" / "dataset_noise.csv"));
  fs::remove_all(dir);
}
