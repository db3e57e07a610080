#ifndef RELENT_RELENT_H
#define RELENT_RELENT_H

/* C interface to the relent shared library. Every function returns a status
 * code; on failure relent_last_error() describes the cause (thread-local, valid
 * until the next call on the same thread). Handles are opaque and owned by the
 * caller. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RELENT_API __declspec(dllexport)
#else
#define RELENT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum relent_status {
  RELENT_OK = 0,
  RELENT_PARTIAL_FAILURE = 1,
  RELENT_CONFIG_ERROR = 2,
  RELENT_INFEASIBLE = 3,
  RELENT_INVALID_ARGUMENT = 4,
  RELENT_INFINITE = 5,
  RELENT_INTERNAL_ERROR = 6
} relent_status;

typedef enum relent_log_level {
  RELENT_LOG_OFF = 0,
  RELENT_LOG_ERROR = 1,
  RELENT_LOG_WARN = 2,
  RELENT_LOG_INFO = 3,
  RELENT_LOG_DEBUG = 4
} relent_log_level;

typedef struct relent_run_options relent_run_options;
typedef struct relent_state_pair relent_state_pair;

RELENT_API const char* relent_version(void);
RELENT_API const char* relent_last_error(void);
RELENT_API const char* relent_status_string(relent_status status);

/* Run options for the config-driven commands. */
RELENT_API relent_status relent_options_create(relent_run_options** out);
RELENT_API void relent_options_destroy(relent_run_options* options);
RELENT_API relent_status relent_options_set_config(relent_run_options* options, const char* path);
RELENT_API relent_status relent_options_set_out_dir(relent_run_options* options, const char* dir);
/* "nats" or "bits"; NULL restores the config's choice. */
RELENT_API relent_status relent_options_set_units(relent_run_options* options, const char* units);
RELENT_API relent_status relent_options_set_seed(relent_run_options* options, uint64_t seed);
RELENT_API relent_status relent_options_set_jobs(relent_run_options* options, int jobs);
RELENT_API relent_status relent_options_set_log_level(relent_run_options* options, relent_log_level level);
/* Parses the values accepted by the RELENT_LOG environment variable. */
RELENT_API relent_log_level relent_parse_log_level(const char* value);

/* Runs fixed-pair, solve, qkd-sweep, capacity-sweep or ree-sweep. The summary
 * goes to stdout and diagnostics to stderr. The return value doubles as the
 * process exit code. */
RELENT_API relent_status relent_run(const char* command, const relent_run_options* options);

/* Fixed state pairs given as row-major dim x dim real and imaginary parts
 * (imag may be NULL). */
RELENT_API relent_status relent_pair_create(int dim, const double* rho_re, const double* rho_im,
                                            const double* sigma_re, const double* sigma_im,
                                            relent_state_pair** out);
RELENT_API void relent_pair_destroy(relent_state_pair* pair);
/* RELENT_INFINITE when the support condition fails. */
RELENT_API relent_status relent_pair_relative_entropy(const relent_state_pair* pair, double* nats);
RELENT_API relent_status relent_pair_sandwich(const relent_state_pair* pair, double* mu, double* lambda);
/* Closed-form lower and upper bounds on the adaptive grid for accuracy eps. */
RELENT_API relent_status relent_pair_bounds(const relent_state_pair* pair, double eps, double* lower,
                                            double* upper, int* grid_points);

#ifdef __cplusplus
}
#endif

#endif
