#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "relent/relent.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "relent_capi_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("state pair handles") {
  const double ket0[] = {1, 0, 0, 0};
  const double mixed[] = {0.5, 0, 0, 0.5};
  relent_state_pair* p = nullptr;
  REQUIRE(relent_pair_create(2, ket0, nullptr, mixed, nullptr, &p) == RELENT_OK);
  double d = 0.0, mu = -1.0, lambda = -1.0, lo = 0.0, up = 0.0;
  int n = 0;
  CHECK(relent_pair_relative_entropy(p, &d) == RELENT_OK);
  CHECK(d == doctest::Approx(std::log(2.0)));
  CHECK(relent_pair_sandwich(p, &mu, &lambda) == RELENT_OK);
  CHECK(std::abs(mu) < 1e-12);
  CHECK(lambda == doctest::Approx(2.0));
  CHECK(relent_pair_bounds(p, 1e-3, &lo, &up, &n) == RELENT_OK);
  CHECK(lo <= d + 1e-12);
  CHECK(up >= d - 1e-12);
  CHECK(n > 2);
  CHECK(relent_pair_bounds(p, -1.0, &lo, &up, &n) == RELENT_INVALID_ARGUMENT);
  relent_pair_destroy(p);

  relent_state_pair* q = nullptr;
  REQUIRE(relent_pair_create(2, mixed, nullptr, ket0, nullptr, &q) == RELENT_OK);
  CHECK(relent_pair_relative_entropy(q, &d) == RELENT_INFINITE);
  CHECK(std::string(relent_last_error()).find("support") != std::string::npos);
  relent_pair_destroy(q);

  const double bad[] = {1, 0, 0, 1};
  CHECK(relent_pair_create(2, bad, nullptr, mixed, nullptr, &p) == RELENT_INVALID_ARGUMENT);
  CHECK(std::string(relent_last_error()).size() > 0);
  CHECK(relent_pair_create(2, nullptr, nullptr, mixed, nullptr, &p) == RELENT_INVALID_ARGUMENT);
}

TEST_CASE("run options") {
  relent_run_options* o = nullptr;
  REQUIRE(relent_options_create(&o) == RELENT_OK);
  CHECK(relent_options_set_units(o, "furlongs") == RELENT_INVALID_ARGUMENT);
  CHECK(relent_options_set_units(o, "bits") == RELENT_OK);
  CHECK(relent_options_set_units(o, nullptr) == RELENT_OK);
  CHECK(relent_options_set_jobs(o, 0) == RELENT_INVALID_ARGUMENT);
  CHECK(relent_options_set_jobs(o, 2) == RELENT_OK);
  CHECK(relent_options_set_seed(o, 42) == RELENT_OK);
  CHECK(relent_options_set_log_level(o, RELENT_LOG_OFF) == RELENT_OK);
  CHECK(relent_parse_log_level("debug") == RELENT_LOG_DEBUG);
  CHECK(relent_parse_log_level(nullptr) == RELENT_LOG_WARN);
  CHECK(relent_run(nullptr, o) == RELENT_INVALID_ARGUMENT);
  relent_options_destroy(o);
  CHECK(std::string(relent_status_string(RELENT_INFEASIBLE)) == "infeasible");
  CHECK(std::string(relent_version()).size() > 0);
}

TEST_CASE("running commands") {
  const fs::path dir = scratch("run");
  {
    std::ofstream(dir / "good.json") << R"({"schema": "relent/v1", "seed": 5,
      "pair": {"source": "random", "dim": 3},
      "schedule": {"strategy": "uniform", "points": [3, 6, 12, 24]}})";
    std::ofstream(dir / "bad.json") << R"({"schema": "relent/v0", "pair": {}})";
  }
  relent_run_options* o = nullptr;
  REQUIRE(relent_options_create(&o) == RELENT_OK);
  relent_options_set_log_level(o, RELENT_LOG_OFF);
  relent_options_set_out_dir(o, (dir / "out").c_str());

  relent_options_set_config(o, (dir / "good.json").c_str());
  CHECK(relent_run("fixed-pair", o) == RELENT_OK);
  CHECK(fs::exists(dir / "out" / "fixed_pair.dat"));
  CHECK(fs::exists(dir / "out" / "fixed_pair.json"));
  CHECK(relent_run("no-such-command", o) == RELENT_CONFIG_ERROR);

  relent_options_set_config(o, (dir / "bad.json").c_str());
  CHECK(relent_run("fixed-pair", o) == RELENT_CONFIG_ERROR);
  relent_options_set_config(o, (dir / "missing.json").c_str());
  CHECK(relent_run("fixed-pair", o) == RELENT_CONFIG_ERROR);
  relent_options_destroy(o);
}
