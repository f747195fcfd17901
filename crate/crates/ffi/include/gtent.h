#ifndef GTENT_H
#define GTENT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GtentStatus {
  GTENT_STATUS_OK = 0,
  GTENT_STATUS_INVALID_ARGUMENT = 1,
  GTENT_STATUS_DIMENSION_MISMATCH = 2,
  GTENT_STATUS_EMPTY_FAMILY = 3,
  GTENT_STATUS_TOLERANCE_UNREACHABLE = 4,
  GTENT_STATUS_NOT_WHITNEY = 5,
  GTENT_STATUS_RESOLUTION = 6,
  GTENT_STATUS_GRID_MISMATCH = 7,
  GTENT_STATUS_DISCRETISATION = 8,
  GTENT_STATUS_CONFIG = 9,
  GTENT_STATUS_NULL_POINTER = 10,
  GTENT_STATUS_OVERFLOW = 11,
  GTENT_STATUS_PANIC = 12,
} GtentStatus;

/**
 * An atomic decomposition with its verification report.
 */
typedef struct GtentDecomposition GtentDecomposition;

/**
 * A function on the session grid.
 */
typedef struct GtentFunction GtentFunction;

/**
 * Grid, calibration and tolerances shared by the calls below.
 */
typedef struct GtentSession GtentSession;

typedef struct GtentDecompositionSummary {
  size_t terms;
  double sum_lambda;
  double norm;
  double reconstruction_error;
  double realized_alpha;
  double kappa_mu;
  /**
   * Nonzero when every structural check of the decomposition passed.
   */
  int checks_passed;
} GtentDecompositionSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t gtent_last_error(char *buf, size_t len);

/**
 * `m(x) = min(1, 1/|x|)`.
 *
 * # Safety
 * `x` must point to `n` readable doubles.
 */
enum GtentStatus gtent_admissibility_radius(const double *x, size_t n, double *value);

/**
 * Gaussian measure of `B(center, radius)` to absolute accuracy `tol`.
 *
 * # Safety
 * `center` must point to `n` readable doubles; `value` and `abs_error`
 * must be writable (`abs_error` may be null).
 */
enum GtentStatus gtent_ball_measure(const double *center,
                                    size_t n,
                                    double radius,
                                    double tol,
                                    double *value,
                                    double *abs_error);

/**
 * Number of cubes in `Delta_{k,l}` in dimension `n`.
 *
 * # Safety
 * `count` must be writable.
 */
enum GtentStatus gtent_layer_cube_count(size_t n, int k, uint32_t l, uint64_t *count);

/**
 * Creates a session from TOML text (null for the defaults).
 *
 * # Safety
 * `toml` must be null or a NUL-terminated string; `session` must be writable.
 */
enum GtentStatus gtent_session_new(const char *toml, struct GtentSession **session);

/**
 * # Safety
 * `session` must be null or a handle from [`gtent_session_new`] not yet freed.
 */
void gtent_session_free(struct GtentSession *session);

/**
 * Number of active `(cell, level)` pairs of the session grid.
 *
 * # Safety
 * `session` must be a live handle; `len` must be writable.
 */
enum GtentStatus gtent_session_active_len(const struct GtentSession *session, size_t *len);

/**
 * Cell centre (`n` doubles written to `y`) and level of active pair `index`.
 *
 * # Safety
 * `session` must be a live handle, `y` must have room for `n` doubles and
 * `t` must be writable.
 */
enum GtentStatus gtent_session_pair(const struct GtentSession *session,
                                    size_t index,
                                    double *y,
                                    double *t);

/**
 * A function from one value per active pair (`len` must equal the active length).
 *
 * # Safety
 * `session` must be a live handle, `values` must point to `len` readable
 * doubles and `function` must be writable.
 */
enum GtentStatus gtent_function_from_values(const struct GtentSession *session,
                                            const double *values,
                                            size_t len,
                                            struct GtentFunction **function);

/**
 * The seeded random test function of stream `stream`.
 *
 * # Safety
 * `session` must be a live handle and `function` writable.
 */
enum GtentStatus gtent_function_sample(const struct GtentSession *session,
                                       uint32_t stream,
                                       bool signed_values,
                                       struct GtentFunction **function);

/**
 * # Safety
 * `function` must be null or a live handle.
 */
void gtent_function_free(struct GtentFunction *function);

/**
 * Discretised `T^{1,q}` norm at aperture `alpha`.
 *
 * # Safety
 * `function` must be a live handle and `norm` writable.
 */
enum GtentStatus gtent_t1q_norm(const struct GtentFunction *function,
                                double q,
                                double alpha,
                                double *norm);

/**
 * Atomic decomposition with the session's `q`, `eta` and calibrated `eta_bar`.
 *
 * # Safety
 * `session` and `function` must be live handles; `decomposition` writable.
 */
enum GtentStatus gtent_decompose(const struct GtentSession *session,
                                 const struct GtentFunction *function,
                                 struct GtentDecomposition **decomposition);

/**
 * # Safety
 * `decomposition` must be null or a live handle.
 */
void gtent_decomposition_free(struct GtentDecomposition *decomposition);

/**
 * # Safety
 * `decomposition` must be a live handle and `summary` writable.
 */
enum GtentStatus gtent_decomposition_summary(const struct GtentDecomposition *decomposition,
                                             double tol,
                                             struct GtentDecompositionSummary *summary);

/**
 * Runs verification suite `id` (1 to 11); `passed` receives 0 or 1.
 *
 * # Safety
 * `session` must be a live handle and `passed` writable.
 */
enum GtentStatus gtent_run_suite(const struct GtentSession *session, uint32_t id, int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GTENT_H */
