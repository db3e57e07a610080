#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "relent/commands.hpp"

using namespace relent::commands;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  ExitCode code;
  std::string out;
  std::string log;
};

Run run_with(const std::string& command, const std::string& config, const std::string& name,
             RunOptions base = {}) {
  const fs::path dir = fs::temp_directory_path() / "relent_commands_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << config;
  base.config_path = (dir / "config.json").string();
  base.out_dir = (dir / "out").string();
  std::ostringstream out, log;
  const auto code = run(command, base, out, log);
  return {code, out.str(), log.str()};
}

std::string out_file(const std::string& name, const std::string& file) {
  std::ifstream in(fs::temp_directory_path() / "relent_commands_test" / name / "out" / file);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<double>> rows(const std::string& text) {
  std::vector<std::vector<double>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> r;
    for (double v; ss >> v;) r.push_back(v);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("config errors name the field") {
  auto r = run_with("fixed-pair", R"({"schema": "relent/v1", "pair": {"source": "random", "dim": 3},
    "schedule": {"strategy": "uniform", "points": [3, 5]}, "colour": "blue"})", "unknown");
  CHECK(r.code == ExitCode::ConfigError);
  CHECK(r.log.find("colour") != std::string::npos);

  r = run_with("fixed-pair", R"({"schema": "relent/v1", "pair": {"source": "random", "dim": "three"},
    "schedule": {"strategy": "uniform", "points": [3]}})", "type");
  CHECK(r.code == ExitCode::ConfigError);
  CHECK(r.log.find("pair.dim") != std::string::npos);

  r = run_with("qkd-sweep", R"({"schema": "relent/v1", "dim": 2})", "missing");
  CHECK(r.code == ExitCode::ConfigError);
  CHECK(r.log.find("alpha") != std::string::npos);

  r = run_with("qkd-sweep", R"({"dim": 2, "alpha": [0]})", "schema");
  CHECK(r.code == ExitCode::ConfigError);
  CHECK(r.log.find("schema") != std::string::npos);

  r = run_with("ree-sweep", R"({"schema": "relent/v1", "alpha": [0.2], "units": "hartleys"})", "units");
  CHECK(r.code == ExitCode::ConfigError);

  r = run_with("solve", R"({"schema": "relent/v1", "problem": {"kind": "witness", "dim": 3, "extra": 1}})",
               "nested");
  CHECK(r.code == ExitCode::ConfigError);
  CHECK(r.log.find("problem.extra") != std::string::npos);

  r = run_with("solve", "{not json", "malformed");
  CHECK(r.code == ExitCode::ConfigError);
}

TEST_CASE("fixed-pair output") {
  const std::string cfg = R"({"schema": "relent/v1", "seed": 9, "pair": {"source": "random", "dim": 4},
    "schedule": {"strategy": "adaptive", "eps": [1e-3, 1e-1, 1e-2, 3e-2, 3e-3]}})";
  auto r = run_with("fixed-pair", cfg, "fp");
  REQUIRE(r.code == ExitCode::Ok);
  const auto dat = out_file("fp", "fixed_pair.dat");
  CHECK(dat.rfind("# n error_lower error_upper\n", 0) == 0);
  const auto rs = rows(dat);
  REQUIRE(rs.size() == 5);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(rs[i][1] >= -1e-12);
    CHECK(rs[i][2] >= -1e-12);
    if (i > 0) CHECK(rs[i][0] > rs[i - 1][0]);
  }
  CHECK(dat.find("# fit gap = c / n^2") != std::string::npos);
  const auto meta = json::parse(out_file("fp", "fixed_pair.json"));
  CHECK(meta["fit"]["r2"].get<double>() > 0.9);

  RunOptions bits;
  bits.units = "bits";
  run_with("fixed-pair", cfg, "fp_bits", bits);
  const auto rsb = rows(out_file("fp_bits", "fixed_pair.dat"));
  CHECK(rsb[0][1] == doctest::Approx(rs[0][1] / std::log(2.0)).epsilon(1e-9));

  RunOptions reseeded;
  reseeded.seed = 10;
  run_with("fixed-pair", cfg, "fp_seed", reseeded);
  CHECK(out_file("fp_seed", "fixed_pair.dat") != dat);
  run_with("fixed-pair", cfg, "fp_again");
  CHECK(out_file("fp_again", "fixed_pair.dat") == dat);

  r = run_with("fixed-pair", R"({"schema": "relent/v1", "pair": {"source": "identical", "dim": 3},
    "schedule": {"strategy": "adaptive", "eps": [0.1, 0.01]}})", "fp_same");
  CHECK(r.code == ExitCode::Ok);
  CHECK(r.out.find("regression skipped") != std::string::npos);

  r = run_with("fixed-pair", R"({"schema": "relent/v1",
    "pair": {"source": "inline", "rho": [[1, 0], [0, 0]], "sigma": {"re": [[0.5, 0], [0, 0.5]]}},
    "schedule": {"strategy": "adaptive", "eps": [0.01]}})", "fp_inline");
  CHECK(r.code == ExitCode::Ok);

  r = run_with("fixed-pair", R"({"schema": "relent/v1",
    "pair": {"source": "inline", "rho": [[0.5, 0], [0, 0.5]], "sigma": [[1, 0], [0, 0]]},
    "schedule": {"strategy": "adaptive", "eps": [0.01]}})", "fp_support");
  CHECK(r.code == ExitCode::ConfigError);
}

TEST_CASE("sweeps sort rows and report bounds") {
  auto r = run_with("qkd-sweep", R"({"schema": "relent/v1", "dim": 2, "alpha": [0.5, 0.0, 0.25], "eps": 0.01})",
                    "qkd");
  REQUIRE(r.code == ExitCode::Ok);
  const auto dat = out_file("qkd", "qkd_sweep.dat");
  CHECK(dat.rfind("# alpha key_rate_lower_bound gap\n", 0) == 0);
  const auto rs = rows(dat);
  REQUIRE(rs.size() == 3);
  CHECK(rs[0][0] == 0.0);
  CHECK(rs[2][0] == 0.5);
  CHECK(rs[0][1] > rs[1][1]);
  CHECK(rs[1][1] > rs[2][1]);
  CHECK(rs[0][1] <= std::log(2.0) + 1e-9);

  RunOptions jobs;
  jobs.jobs = 3;
  run_with("qkd-sweep", R"({"schema": "relent/v1", "dim": 2, "alpha": [0.5, 0.0, 0.25], "eps": 0.01})", "qkd_jobs",
           jobs);
  CHECK(out_file("qkd_jobs", "qkd_sweep.dat") == dat);
  CHECK(out_file("qkd_jobs", "qkd_sweep.json") == out_file("qkd", "qkd_sweep.json"));
}

TEST_CASE("solve exit codes") {
  auto r = run_with("solve", R"({"schema": "relent/v1", "problem": {"kind": "two-free", "dim": 2},
    "target_eps": 0.05})", "two_free");
  CHECK(r.code == ExitCode::Ok);
  CHECK(r.out.find("status gap-met") != std::string::npos);
  const auto meta = json::parse(out_file("two_free", "solve.json"));
  CHECK(meta["best_lower"].get<double>() <= 1e-9);
  CHECK(meta["best_upper"].get<double>() >= -1e-9);

  r = run_with("solve", R"({"schema": "relent/v1", "problem": {"kind": "entropy", "dim": 2, "constraints": [
    {"observable": [[1, 0], [0, -1]], "value": 1.0},
    {"observable": [[2, 0], [0, -2]], "value": 0.0}]}})", "infeasible");
  CHECK(r.code == ExitCode::Infeasible);

  r = run_with("solve", R"({"schema": "relent/v1", "problem": {"kind": "entropy", "dim": 2, "constraints": [
    {"observable": [[1, 0], [0, -1]], "value": 1.0}]}, "target_eps": 1e-9, "budget": 1})", "budget");
  CHECK(r.code == ExitCode::Ok);
  CHECK(r.out.find("status budget-exhausted") != std::string::npos);
  CHECK(r.out.find("entropy [") != std::string::npos);
}
