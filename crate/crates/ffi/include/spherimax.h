#ifndef SPHERIMAX_H
#define SPHERIMAX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SmxStatus {
  SMX_STATUS_OK = 0,
  SMX_STATUS_NULL_POINTER = 1,
  SMX_STATUS_INVALID_ARGUMENT = 2,
  SMX_STATUS_UNKNOWN_FUNCTIONAL = 3,
  SMX_STATUS_CONDITION_FAILS = 4,
  SMX_STATUS_INFEASIBLE_LEVEL = 5,
  SMX_STATUS_SOLVER_FAILURE = 6,
  SMX_STATUS_OUT_OF_RANGE = 7,
  SMX_STATUS_GRADIENT_UNDEFINED = 8,
  SMX_STATUS_IO = 9,
  SMX_STATUS_PANIC = 10,
} SmxStatus;

/**
 * Opaque tabulated curve.
 */
typedef struct SmxCurve SmxCurve;

/**
 * Opaque problem instance.
 */
typedef struct SmxInstance SmxInstance;

typedef struct SmxTolerances {
  double tol_opt;
  double tol_res;
  double tol_val;
  double tol_cluster;
  size_t grid_points;
  size_t restarts;
} SmxTolerances;

/**
 * `J(x)` for `x` of length `n`.
 */
typedef double (*SmxValueFn)(const double *x, size_t n, void *user_data);

/**
 * Writes `J'(x)` into `out` (length `n`).
 */
typedef void (*SmxGradientFn)(const double *x, size_t n, double *out, void *user_data);

/**
 * `delta` is `INFINITY` when `delta_rho = +inf`.
 */
typedef struct SmxCondition {
  bool holds;
  double beta;
  double delta;
  double rho;
} SmxCondition;

/**
 * `residual` is NaN when the gradient is undefined at the representative.
 */
typedef struct SmxEtaSample {
  double r;
  double eta;
  double psi;
  double residual;
  size_t n_clusters;
  size_t dinkelbach_iters;
  bool in_working_interval;
} SmxEtaSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default tolerances.
 */
struct SmxTolerances smx_tolerances_default(void);

/**
 * Creates an instance from a zoo functional. `param_names`/`param_values`
 * hold `n_params` entries (both may be null when `n_params == 0`);
 * `tolerances` may be null for the defaults.
 *
 * # Safety
 * Pointers must be null or valid for the stated lengths; strings must be
 * NUL-terminated.
 */
enum SmxStatus smx_instance_new(const char *name,
                                const char *const *param_names,
                                const double *param_values,
                                size_t n_params,
                                size_t n,
                                double rho,
                                const struct SmxTolerances *tolerances,
                                uint64_t seed,
                                struct SmxInstance **out);

/**
 * Creates an instance from C callbacks. `J(0)` must be 0. The callbacks
 * are invoked concurrently from worker threads and must be thread-safe;
 * `user_data` must outlive the instance.
 *
 * # Safety
 * Function pointers must be valid; see above for `user_data`.
 */
enum SmxStatus smx_instance_new_callback(size_t n,
                                         double rho,
                                         SmxValueFn value,
                                         SmxGradientFn gradient,
                                         void *user_data,
                                         bool smooth_at_origin,
                                         bool radial,
                                         const struct SmxTolerances *tolerances,
                                         uint64_t seed,
                                         struct SmxInstance **out);

/**
 * Releases an instance; null is ignored.
 *
 * # Safety
 * `inst` must come from an `smx_instance_new*` call and not be used again.
 */
void smx_instance_free(struct SmxInstance *inst);

/**
 * Dimension of the instance, 0 for null.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t smx_instance_dim(const struct SmxInstance *inst);

/**
 * Evaluates the feasibility gate `beta_rho/rho < delta_rho` (cached).
 *
 * # Safety
 * `inst` must be a live handle, `out` writable.
 */
enum SmxStatus smx_check_condition(const struct SmxInstance *inst, struct SmxCondition *out);

/**
 * `eta(r)` with its argmax data. `representative` may be null, otherwise
 * it receives `n` coordinates.
 *
 * # Safety
 * `inst` live, `out` writable, `representative` null or `n` writable doubles.
 */
enum SmxStatus smx_compute_eta(const struct SmxInstance *inst,
                               double r,
                               struct SmxEtaSample *out,
                               double *representative);

/**
 * `‖x - lambda·J'(x)‖ / (1 + ‖x‖)`.
 *
 * # Safety
 * `inst` live, `x` readable for `n` doubles, `out` writable.
 */
enum SmxStatus smx_fixed_point_residual(const struct SmxInstance *inst,
                                        const double *x,
                                        size_t n,
                                        double lambda,
                                        double *out);

/**
 * Tabulates `count >= 3` geometrically spaced levels on `[r_lo, r_hi]`.
 * Levels that fail are skipped; see [`smx_curve_failures`].
 *
 * # Safety
 * `inst` live, `out` writable.
 */
enum SmxStatus smx_curve_new(const struct SmxInstance *inst,
                             double r_lo,
                             double r_hi,
                             size_t count,
                             struct SmxCurve **out);

/**
 * Number of successful samples, 0 for null.
 *
 * # Safety
 * `curve` must be null or live.
 */
size_t smx_curve_len(const struct SmxCurve *curve);

/**
 * Number of levels that failed, 0 for null.
 *
 * # Safety
 * `curve` must be null or live.
 */
size_t smx_curve_failures(const struct SmxCurve *curve);

/**
 * Sample `index` in increasing `r`.
 *
 * # Safety
 * `curve` live, `out` writable, `representative` null or `n` writable doubles.
 */
enum SmxStatus smx_curve_sample(const struct SmxCurve *curve,
                                size_t index,
                                struct SmxEtaSample *out,
                                double *representative);

/**
 * Writes the curve in the `eta_curve.csv` format.
 *
 * # Safety
 * `curve` live, `path` a NUL-terminated string.
 */
enum SmxStatus smx_curve_write_csv(const struct SmxCurve *curve, const char *path);

/**
 * Releases a curve; null is ignored.
 *
 * # Safety
 * `curve` must come from [`smx_curve_new`] and not be used again.
 */
void smx_curve_free(struct SmxCurve *curve);

/**
 * Message of the last failed call on this thread ("" after a success).
 * Valid until the next call on the same thread.
 */
const char *smx_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *smx_status_str(enum SmxStatus status);

/**
 * Library version, e.g. `"0.1.0"`.
 */
const char *smx_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHERIMAX_H */
