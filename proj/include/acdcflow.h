/* C interface of the AC/DC power flow library.
 *
 * All functions return acdc_status; ACDC_OK means success. On any failure
 * acdc_last_error() holds a human-readable message for the calling thread.
 * Handles are opaque and must be released with the matching _free call.
 */
#ifndef ACDCFLOW_H
#define ACDCFLOW_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum acdc_status {
  ACDC_OK = 0,
  ACDC_INVALID_ARGS = 1,
  ACDC_PARSE_FAILED = 2,
  ACDC_VALIDATION_FAILED = 3,
  ACDC_DIVERGED = 4,
  ACDC_ORACLE_UNRELIABLE = 5,
  ACDC_IO_FAILED = 6,
  ACDC_INTERNAL = 9
} acdc_status;

typedef struct acdc_case acdc_case;
typedef struct acdc_solution acdc_solution;

/* Library version string, static storage. */
const char* acdc_version(void);

/* Last error message of the calling thread; empty string when none. */
const char* acdc_last_error(void);

/* Case loading. On success *out owns the validated case. */
acdc_status acdc_case_load(const char* path, acdc_case** out);
acdc_status acdc_case_parse(const char* text, const char* origin, acdc_case** out);
void acdc_case_free(acdc_case* c);

const char* acdc_case_name(const acdc_case* c);
int acdc_case_ac_bus_count(const acdc_case* c);
int acdc_case_dc_bus_count(const acdc_case* c);
int acdc_case_converter_count(const acdc_case* c);

/* Deterministic solve at expected injections. max_iterations <= 0 and
 * tolerance <= 0 select the defaults (20, 1e-8). A non-converged solve
 * returns ACDC_DIVERGED and no solution handle. */
acdc_status acdc_solve(const acdc_case* c, int max_iterations, double tolerance,
                       acdc_solution** out);
void acdc_solution_free(acdc_solution* s);

int acdc_solution_iterations(const acdc_solution* s);
double acdc_solution_max_mismatch(const acdc_solution* s);
double acdc_solution_balance_residual(const acdc_solution* s);

/* Per-bus results by bus id. Angle in radians. */
acdc_status acdc_solution_ac_voltage(const acdc_solution* s, int bus_id, double* mag,
                                     double* angle_rad);
acdc_status acdc_solution_dc_voltage(const acdc_solution* s, int bus_id, double* u);

/* Batch pipeline, equivalent to the command-line tool. method is one of
 * "flow", "cm", "mcs", "compare". Zero/NULL fields select defaults. */
typedef struct acdc_run_options {
  const char* method;
  const char* out_dir;
  const char* monitor;
  int samples;
  unsigned long long seed;
  int order;
  int grid_points;
  int workers;
} acdc_run_options;

acdc_status acdc_run(const char* case_path, const acdc_run_options* opt);

#ifdef __cplusplus
}
#endif

#endif /* ACDCFLOW_H */
