#include "relent/relent.h"

#include <iostream>
#include <string>

#include "relent/commands.hpp"
#include "relent/divergence.hpp"
#include "relent/error.hpp"

struct relent_run_options {
  relent::commands::RunOptions opts;
};

struct relent_state_pair {
  relent::divergence::StatePair pair;
};

namespace {

thread_local std::string last_error;

relent_status fail(relent_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

template <class F>
relent_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const relent::ConfigError& e) {
    return fail(RELENT_CONFIG_ERROR, e.what());
  } catch (const relent::ValidationError& e) {
    return fail(RELENT_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(RELENT_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(RELENT_INTERNAL_ERROR, "unknown exception");
  }
}

relent::linalg::CMatrix read_matrix(int dim, const double* re, const double* im) {
  relent::linalg::CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = {re[i * dim + j], im ? im[i * dim + j] : 0.0};
  return m;
}

}  // namespace

extern "C" {

const char* relent_version(void) { return "1.0.0"; }

const char* relent_last_error(void) { return last_error.c_str(); }

const char* relent_status_string(relent_status status) {
  switch (status) {
    case RELENT_OK: return "ok";
    case RELENT_PARTIAL_FAILURE: return "partial failure";
    case RELENT_CONFIG_ERROR: return "config error";
    case RELENT_INFEASIBLE: return "infeasible";
    case RELENT_INVALID_ARGUMENT: return "invalid argument";
    case RELENT_INFINITE: return "infinite divergence";
    case RELENT_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

relent_status relent_options_create(relent_run_options** out) {
  if (!out) return fail(RELENT_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = new relent_run_options{};
    return RELENT_OK;
  });
}

void relent_options_destroy(relent_run_options* options) { delete options; }

relent_status relent_options_set_config(relent_run_options* options, const char* path) {
  if (!options || !path) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  options->opts.config_path = path;
  return RELENT_OK;
}

relent_status relent_options_set_out_dir(relent_run_options* options, const char* dir) {
  if (!options || !dir) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  options->opts.out_dir = dir;
  return RELENT_OK;
}

relent_status relent_options_set_units(relent_run_options* options, const char* units) {
  if (!options) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  if (!units) {
    options->opts.units.reset();
    return RELENT_OK;
  }
  const std::string u(units);
  if (u != "nats" && u != "bits") return fail(RELENT_INVALID_ARGUMENT, "units must be nats or bits");
  options->opts.units = u;
  return RELENT_OK;
}

relent_status relent_options_set_seed(relent_run_options* options, uint64_t seed) {
  if (!options) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  options->opts.seed = seed;
  return RELENT_OK;
}

relent_status relent_options_set_jobs(relent_run_options* options, int jobs) {
  if (!options) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  if (jobs < 1) return fail(RELENT_INVALID_ARGUMENT, "jobs must be >= 1");
  options->opts.jobs = jobs;
  return RELENT_OK;
}

relent_status relent_options_set_log_level(relent_run_options* options, relent_log_level level) {
  if (!options) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  if (level < RELENT_LOG_OFF || level > RELENT_LOG_DEBUG) return fail(RELENT_INVALID_ARGUMENT, "bad log level");
  options->opts.log_level = static_cast<relent::commands::LogLevel>(level);
  return RELENT_OK;
}

relent_log_level relent_parse_log_level(const char* value) {
  return static_cast<relent_log_level>(relent::commands::parse_log_level(value));
}

relent_status relent_run(const char* command, const relent_run_options* options) {
  if (!command || !options) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto code = relent::commands::run(command, options->opts, std::cout, std::cerr);
    std::cout.flush();
    std::cerr.flush();
    if (code == relent::commands::ExitCode::ConfigError) last_error = "config error";
    return static_cast<relent_status>(code);
  });
}

relent_status relent_pair_create(int dim, const double* rho_re, const double* rho_im, const double* sigma_re,
                                 const double* sigma_im, relent_state_pair** out) {
  if (!out || !rho_re || !sigma_re) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  if (dim < 1) return fail(RELENT_INVALID_ARGUMENT, "dim must be >= 1");
  return guarded([&] {
    relent::linalg::DensityMatrix rho(read_matrix(dim, rho_re, rho_im));
    relent::linalg::DensityMatrix sigma(read_matrix(dim, sigma_re, sigma_im));
    *out = new relent_state_pair{relent::divergence::StatePair(rho, sigma)};
    return RELENT_OK;
  });
}

void relent_pair_destroy(relent_state_pair* pair) { delete pair; }

relent_status relent_pair_relative_entropy(const relent_state_pair* pair, double* nats) {
  if (!pair || !nats) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto d = relent::divergence::relative_entropy_exact(pair->pair);
    if (d.is_infinite()) return fail(RELENT_INFINITE, "support of rho is not contained in support of sigma");
    *nats = d.nats();
    return RELENT_OK;
  });
}

relent_status relent_pair_sandwich(const relent_state_pair* pair, double* mu, double* lambda) {
  if (!pair || !mu || !lambda) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto sc = relent::divergence::sandwich_constants(pair->pair);
    if (!sc.support_ok) return fail(RELENT_INFINITE, "support of rho is not contained in support of sigma");
    *mu = sc.mu;
    *lambda = sc.lambda;
    return RELENT_OK;
  });
}

relent_status relent_pair_bounds(const relent_state_pair* pair, double eps, double* lower, double* upper,
                                 int* grid_points) {
  if (!pair || !lower || !upper) return fail(RELENT_INVALID_ARGUMENT, "null argument");
  if (!(eps > 0.0)) return fail(RELENT_INVALID_ARGUMENT, "eps must be positive");
  return guarded([&] {
    const auto sc = relent::divergence::sandwich_constants(pair->pair);
    if (!sc.support_ok) return fail(RELENT_INFINITE, "support of rho is not contained in support of sigma");
    const auto g = sc.lambda - sc.mu <= 1e-12 ? relent::grid::Grid::degenerate(sc.lambda)
                                              : relent::grid::adaptive_grid(sc.mu, sc.lambda, eps);
    *lower = relent::divergence::eta_lower_fixed(pair->pair, g);
    *upper = relent::divergence::upper_fixed(pair->pair, g);
    if (grid_points) *grid_points = g.size();
    return RELENT_OK;
  });
}

}  // extern "C"
