#ifndef AGOG_H
#define AGOG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AgogStatus {
  AGOG_STATUS_OK = 0,
  AGOG_STATUS_NULL_POINTER = 1,
  AGOG_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON or a rejected spec or configuration.
  AGOG_STATUS_CONFIG = 3,
  // The run diverged; a result holding the partial trace is still returned.
  AGOG_STATUS_DIVERGED = 4,
  AGOG_STATUS_INVALID_ARGUMENT = 5,
  AGOG_STATUS_BUFFER_TOO_SMALL = 6,
  AGOG_STATUS_PANIC = 7,
} AgogStatus;

// A built problem instance.
typedef struct AgogProblem AgogProblem;

// The outcome of one solver run.
typedef struct AgogResult AgogResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *agog_last_error_message(void);

// # Safety
// `s` must come from this library or be null.
void agog_string_free(char *s);

// Builds a problem from the JSON of a `problem` config section.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum AgogStatus agog_problem_from_json(const char *json, struct AgogProblem **out);

// # Safety
// `p` must come from [`agog_problem_from_json`] or be null.
void agog_problem_free(struct AgogProblem *p);

// # Safety
// `p` must be a live problem; `n` and `m` must be writable.
enum AgogStatus agog_problem_dims(const struct AgogProblem *p, size_t *n, size_t *m);

// Copies `z* = (x*, y*)` into `buf`, which holds `len` doubles.
//
// # Safety
// `p` must be a live problem; `buf` must hold `len` doubles.
enum AgogStatus agog_problem_optimum(const struct AgogProblem *p, double *buf, size_t len);

// Runs one algorithm on `problem`. `run_json` is a config without its
// `problem` section: `algorithm` (exactly one), `run` (exactly one seed) and
// an optional `noise`. On [`AgogStatus::Diverged`], `out` receives the
// partial trace.
//
// # Safety
// `problem` must be live, `run_json` NUL-terminated, `out` writable.
enum AgogStatus agog_solve(const struct AgogProblem *problem,
                           const char *run_json,
                           struct AgogResult **out);

// # Safety
// `r` must come from [`agog_solve`] or be null.
void agog_result_free(struct AgogResult *r);

// Iterations performed. Zero for a null handle.
//
// # Safety
// `r` must be live or null.
uint64_t agog_result_iterations(const struct AgogResult *r);

// Coupling-oracle calls. Zero for a null handle.
//
// # Safety
// `r` must be live or null.
uint64_t agog_result_h_calls(const struct AgogResult *r);

// Individual-oracle calls. Zero for a null handle.
//
// # Safety
// `r` must be live or null.
uint64_t agog_result_f_calls(const struct AgogResult *r);

// Squared distance to `z*` in the last trace row; NaN when unknown.
//
// # Safety
// `r` must be live or null.
double agog_result_final_sq_dist(const struct AgogResult *r);

// Copies the output iterate `(x, y)` into `buf`. Fails after divergence.
//
// # Safety
// `r` must be live; `buf` must hold `len` doubles.
enum AgogStatus agog_result_output(const struct AgogResult *r, double *buf, size_t len);

// The trace as CSV. Free with [`agog_string_free`]; null on failure.
//
// # Safety
// `r` must be live or null.
char *agog_result_trace_csv(const struct AgogResult *r);

// Runs a full experiment config and returns its cross-seed aggregate as
// CSV through `csv_out`. Nothing is written to disk.
//
// # Safety
// `config_json` must be NUL-terminated; `csv_out` writable.
enum AgogStatus agog_run_experiment_json(const char *config_json, char **csv_out);

// Deterministic stepsize at iteration `k`.
//
// # Safety
// `out` must be writable.
enum AgogStatus agog_eta(uint64_t k, double l, double l_h, double *out);

// Stochastic stepsize at iteration `k` with damping `d`.
//
// # Safety
// `out` must be writable.
enum AgogStatus agog_eta_stochastic(uint64_t k, double l, double l_h, double d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGOG_H */
