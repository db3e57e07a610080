#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "relent/relent.h"

namespace {

int check(relent_status s) {
  if (s != RELENT_OK) std::fprintf(stderr, "relent: %s: %s\n", relent_status_string(s), relent_last_error());
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified bounds on quantum relative entropy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", relent_version());

  std::string config;
  std::string out_dir = ".";
  std::string units;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  const char* commands[][2] = {
      {"fixed-pair", "Convergence study of the closed-form bounds on one state pair"},
      {"solve", "Certified bracket for one problem, refined to a target gap"},
      {"qkd-sweep", "Key-rate lower bounds over the isotropic noise parameter"},
      {"capacity-sweep", "Entanglement-assisted capacity of amplitude damping"},
      {"ree-sweep", "Relative entropy of entanglement of isotropic two-qubit states"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--units", units, "Reporting units")->check(CLI::IsMember({"nats", "bits"}));
    sub->add_option("--seed", seed, "Seed overriding the config");
    sub->add_option("--jobs", jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : RELENT_CONFIG_ERROR;
  }

  relent_run_options* opts = nullptr;
  if (int s = check(relent_options_create(&opts))) return s;
  int status = check(relent_options_set_config(opts, config.c_str()));
  if (!status) status = check(relent_options_set_out_dir(opts, out_dir.c_str()));
  if (!status && !units.empty()) status = check(relent_options_set_units(opts, units.c_str()));
  if (!status && seed) status = check(relent_options_set_seed(opts, *seed));
  if (!status) status = check(relent_options_set_jobs(opts, jobs));
  if (!status) status = check(relent_options_set_log_level(opts, relent_parse_log_level(std::getenv("RELENT_LOG"))));
  if (!status) {
    status = relent_run(app.get_subcommands().front()->get_name().c_str(), opts);
    if (status > RELENT_INFEASIBLE) check(static_cast<relent_status>(status));
  }
  relent_options_destroy(opts);
  if (status == RELENT_INVALID_ARGUMENT) return RELENT_CONFIG_ERROR;
  return status > RELENT_INFEASIBLE ? RELENT_PARTIAL_FAILURE : status;
}
