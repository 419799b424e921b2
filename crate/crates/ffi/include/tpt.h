#ifndef TPT_H
#define TPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which singular end a datum applies to.
 */
typedef enum TptEnd {
  TPT_END_SIN = 0,
  TPT_END_COS = 1,
} TptEnd;

/**
 * Return code of every fallible call.
 */
typedef enum TptStatus {
  TPT_STATUS_OK = 0,
  TPT_STATUS_NULL_POINTER = 1,
  TPT_STATUS_VALIDATION = 2,
  TPT_STATUS_DOMAIN = 3,
  TPT_STATUS_REGIME = 4,
  TPT_STATUS_UNSUPPORTED = 5,
  TPT_STATUS_GAMMA_POLE = 6,
  TPT_STATUS_NON_CONVERGENCE = 7,
  TPT_STATUS_DEGENERATE = 8,
  TPT_STATUS_NUMERICAL = 9,
  TPT_STATUS_INDEX_OUT_OF_RANGE = 10,
  TPT_STATUS_BUFFER_TOO_SMALL = 11,
  TPT_STATUS_PANIC = 12,
} TptStatus;

/**
 * Potential plus boundary data.
 */
typedef struct TptProblem TptProblem;

/**
 * Result of a spectral scan.
 */
typedef struct TptSpectrum TptSpectrum;

/**
 * One bound state; `sign` is -1 for negative energy (`magnitude = κ/α`)
 * and +1 for positive energy (`magnitude = k/α`).
 */
typedef struct TptLevel {
  size_t index;
  int32_t sign;
  double magnitude;
  double residual;
} TptLevel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a problem with default data: UV points at real-ν ends, phase 0 at
 * attractive ends, `D = 0` on the critical line.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TptStatus tpt_problem_new(double alpha, double g_s, double g_c, struct TptProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`tpt_problem_new`] not yet freed.
 */
void tpt_problem_free(struct TptProblem *problem);

/**
 * UV (`ir = false`) or IR fixed point at a real-ν end.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum TptStatus tpt_problem_set_fixed_point(struct TptProblem *problem, enum TptEnd end, bool ir);

/**
 * Scale datum from `ε(αL)^{2ν}` at a weak-medium end.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum TptStatus tpt_problem_set_scale(struct TptProblem *problem,
                                     enum TptEnd end,
                                     double scale_term);

/**
 * Phase `θ` at a strongly attractive end.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum TptStatus tpt_problem_set_phase(struct TptProblem *problem, enum TptEnd end, double theta);

/**
 * `(D, θ)` at a critical end.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum TptStatus tpt_problem_set_critical(struct TptProblem *problem,
                                        enum TptEnd end,
                                        double d,
                                        double theta);

/**
 * Scans `k/α` and `κ/α` in `[lo, hi]` with the default grid.
 *
 * # Safety
 * `problem` must be a live handle and `out` valid for one handle.
 */
enum TptStatus tpt_spectrum_solve(const struct TptProblem *problem,
                                  double lo,
                                  double hi,
                                  struct TptSpectrum **out);

/**
 * # Safety
 * `spectrum` must be null or a handle from [`tpt_spectrum_solve`] not yet freed.
 */
void tpt_spectrum_free(struct TptSpectrum *spectrum);

/**
 * Number of levels; 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t tpt_spectrum_len(const struct TptSpectrum *spectrum);

/**
 * Level `i` in the solver's order: negative branch deepest first, then
 * positive ascending.
 *
 * # Safety
 * `spectrum` must be a live handle and `out` valid for one `TptLevel`.
 */
enum TptStatus tpt_spectrum_level(const struct TptSpectrum *spectrum,
                                  size_t i,
                                  struct TptLevel *out);

/**
 * Finite-element eigenvalues `E/α²` in `[lo, hi)`, written to `buf`.
 * `len` receives the count; if it exceeds `cap`, nothing is written and
 * the status is `BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `problem` must be a live handle, `buf` valid for `cap` doubles (or null
 * with `cap = 0`), and `len` valid for one `size_t`.
 */
enum TptStatus tpt_oracle_levels(const struct TptProblem *problem,
                                 double lo,
                                 double hi,
                                 double *buf,
                                 size_t cap,
                                 size_t *len);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *tpt_last_error(void);

/**
 * Library version as a static string.
 */
const char *tpt_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TPT_H */
