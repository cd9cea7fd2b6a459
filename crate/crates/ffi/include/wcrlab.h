#ifndef WCRLAB_H
#define WCRLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Codes 2 and 3 match the CLI exit codes.
 */
typedef enum WcrStatus {
  WCR_STATUS_OK = 0,
  WCR_STATUS_NULL_POINTER = 1,
  WCR_STATUS_INVALID_ARGUMENT = 2,
  WCR_STATUS_NUMERIC_FAILURE = 3,
  WCR_STATUS_BUFFER_TOO_SMALL = 4,
  WCR_STATUS_PANIC = 5,
} WcrStatus;

/**
 * A statistic of a sample.
 */
typedef struct WcrEstimator WcrEstimator;

/**
 * A parametric family.
 */
typedef struct WcrFamily WcrFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *wcr_last_error(void);

/**
 * Creates a family from a catalog id such as `"location:gaussian"` or `"pareto"`.
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WcrStatus wcr_family_new(const char *id, struct WcrFamily **out);

/**
 * # Safety
 * `family` must come from [`wcr_family_new`] and not be used afterwards. Null is ignored.
 */
void wcr_family_free(struct WcrFamily *family);

/**
 * Parameter dimension `p`, or 0 for a null handle.
 *
 * # Safety
 * `family` must be null or a live handle.
 */
size_t wcr_family_param_dim(const struct WcrFamily *family);

/**
 * Data dimension `d`, or 0 for a null handle.
 *
 * # Safety
 * `family` must be null or a live handle.
 */
size_t wcr_family_data_dim(const struct WcrFamily *family);

/**
 * Draws `n` points at `theta` (length `p`) into `out` (`n * d` values).
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum WcrStatus wcr_family_sample(const struct WcrFamily *family,
                                 const double *theta,
                                 size_t p,
                                 size_t n,
                                 uint64_t seed,
                                 double *out,
                                 size_t out_len);

/**
 * Wasserstein information `J(theta)` into `out` (`p * p`, row-major).
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum WcrStatus wcr_information(const struct WcrFamily *family,
                               const double *theta,
                               size_t p,
                               double *out,
                               size_t out_len);

/**
 * Creates an estimator from a catalog id. `family` may be null for
 * family-independent estimators.
 *
 * # Safety
 * `id` must be a NUL-terminated string, `family` null or live, `out` valid.
 */
enum WcrStatus wcr_estimator_new(const char *id,
                                 const struct WcrFamily *family,
                                 struct WcrEstimator **out);

/**
 * # Safety
 * `estimator` must come from [`wcr_estimator_new`] and not be used afterwards. Null is ignored.
 */
void wcr_estimator_free(struct WcrEstimator *estimator);

/**
 * Monte Carlo cosensitivity (`k * k`, row-major) and its standard errors.
 * `stderr_out` may be null.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum WcrStatus wcr_sensitivity(const struct WcrFamily *family,
                               const struct WcrEstimator *estimator,
                               const double *theta,
                               size_t p,
                               size_t n,
                               size_t reps,
                               uint64_t seed,
                               double *out,
                               double *stderr_out,
                               size_t out_len);

/**
 * Projection estimate from `n` points of dimension `d` (1, or 2 for planar
 * families). Writes `p` values to `theta_out` and the fitted `W₂²` to
 * `objective_out` when that is not null.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum WcrStatus wcr_wpe_fit(const struct WcrFamily *family,
                           const double *data,
                           size_t n,
                           size_t d,
                           double *theta_out,
                           size_t p,
                           double *objective_out);

/**
 * Semi-discrete transport from a planar family at `theta` to `n` equal-mass
 * sites (`n * 2` values). Writes `n` weights, `n` masses and `W₂²`.
 * `masses_out` and `w2sq_out` may be null.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum WcrStatus wcr_sdot_solve(const struct WcrFamily *family,
                              double theta,
                              const double *sites,
                              size_t n,
                              double *weights_out,
                              double *masses_out,
                              double *w2sq_out);

/**
 * Library version, static storage.
 */
const char *wcr_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WCRLAB_H */
