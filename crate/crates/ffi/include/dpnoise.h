#ifndef DPNOISE_H
#define DPNOISE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DpnStatus {
  DPN_STATUS_OK = 0,
  DPN_STATUS_NULL_POINTER = 1,
  DPN_STATUS_INVALID_PARAMS = 2,
  DPN_STATUS_ZERO_PRIVACY = 3,
  DPN_STATUS_INVALID_DISTRIBUTION = 4,
  DPN_STATUS_INVALID_COST = 5,
  DPN_STATUS_INTEGRALITY_VIOLATED = 6,
  DPN_STATUS_EPSILON_ZERO = 7,
  DPN_STATUS_TOO_LARGE = 8,
  DPN_STATUS_NO_CERTIFICATE = 9,
  DPN_STATUS_LP_FAILURE = 10,
  DPN_STATUS_UNSUPPORTED = 11,
  DPN_STATUS_BUFFER_TOO_SMALL = 12,
  DPN_STATUS_PANIC = 13,
} DpnStatus;

/**
 * Opaque cost function.
 */
typedef struct DpnCost DpnCost;

/**
 * Opaque noise distribution.
 */
typedef struct DpnDistribution DpnDistribution;

/**
 * Bounds for one parameter point. Missing values are NaN.
 */
typedef struct DpnGap {
  double v_lb;
  double v_ub_uniform;
  double v_ub_laplace;
  double v_ub_min;
  double ratio;
  /**
   * Nonzero when the lower bound is certified.
   */
  int32_t lb_certified;
} DpnGap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dpn_version(void);

/**
 * Message for the last failed call on this thread. Valid until the next call
 * on the same thread; empty if nothing has failed yet.
 */
const char *dpn_last_error(void);

/**
 * Static description of a status code.
 */
const char *dpn_status_str(enum DpnStatus status);

/**
 * `m` = 1 gives l1, 2 gives l2, m >= 3 gives |k|^m.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DpnStatus dpn_cost_new_power(uint32_t m, struct DpnCost **out);

/**
 * Table cost indexed by |k|; evaluating past the end is an error.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` to storage for one handle.
 */
enum DpnStatus dpn_cost_new_table(const double *values, size_t len, struct DpnCost **out);

/**
 * # Safety
 * `cost` must be null or a handle from `dpn_cost_new_*` not yet freed.
 */
void dpn_cost_free(struct DpnCost *cost);

/**
 * # Safety
 * `cost` must be a live handle, `point` must hold `dims` integers, `out` must be writable.
 */
enum DpnStatus dpn_cost_value(const struct DpnCost *cost,
                              const int64_t *point,
                              size_t dims,
                              double *out);

/**
 * Uniform mechanism of width Delta/delta per axis.
 *
 * # Safety
 * `out` must be writable.
 */
enum DpnStatus dpn_dist_new_uniform(uint32_t sensitivity,
                                    double delta,
                                    uint32_t dims,
                                    struct DpnDistribution **out);

/**
 * Discrete Laplacian with lambda = exp(-epsilon/Delta) per axis.
 *
 * # Safety
 * `out` must be writable.
 */
enum DpnStatus dpn_dist_new_laplace(double epsilon,
                                    uint32_t sensitivity,
                                    uint32_t dims,
                                    struct DpnDistribution **out);

/**
 * One-dimensional pmf with `probs[j]` at `offset + j`.
 *
 * # Safety
 * `probs` must point to `len` readable doubles; `out` must be writable.
 */
enum DpnStatus dpn_dist_new_finite(int64_t offset,
                                   const double *probs,
                                   size_t len,
                                   struct DpnDistribution **out);

/**
 * Distribution from its JSON form (`{"type":"finite",...}` etc.).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DpnStatus dpn_dist_from_json(const char *json, struct DpnDistribution **out);

/**
 * # Safety
 * `dist` must be null or a live handle.
 */
void dpn_dist_free(struct DpnDistribution *dist);

/**
 * # Safety
 * `dist` must be a live handle.
 */
size_t dpn_dist_dims(const struct DpnDistribution *dist);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum DpnStatus dpn_expected_cost(const struct DpnDistribution *dist,
                                 const struct DpnCost *cost,
                                 double *out);

/**
 * Smallest delta for which `dist` is (epsilon, delta)-DP at the given sensitivity.
 *
 * # Safety
 * `dist` must be live; `out` must be writable.
 */
enum DpnStatus dpn_tightest_delta(const struct DpnDistribution *dist,
                                  double epsilon,
                                  uint32_t sensitivity,
                                  double *out);

/**
 * Writes `n` draws (row-major, `dims` values each) into `out`, which must hold
 * `capacity >= n * dims` integers.
 *
 * # Safety
 * `dist` must be live and `out` must point to `capacity` writable integers.
 */
enum DpnStatus dpn_sample(const struct DpnDistribution *dist,
                          uint64_t seed,
                          size_t n,
                          int64_t *out,
                          size_t capacity);

/**
 * Best certified lower bound, mechanism upper bounds and their ratio.
 * `use_lp` nonzero lets a one-dimensional LP supply a missing lower bound.
 *
 * # Safety
 * `cost` must be live; `out` must be writable.
 */
enum DpnStatus dpn_bounds(const struct DpnCost *cost,
                          double epsilon,
                          double delta,
                          uint32_t sensitivity,
                          uint32_t dims,
                          int32_t use_lp,
                          struct DpnGap *out);

/**
 * Optimum of the truncated relaxed LP (one dimension); `truncation` 0 picks the default.
 *
 * # Safety
 * `cost` must be live; `out` must be writable.
 */
enum DpnStatus dpn_lp_optimum(const struct DpnCost *cost,
                              double epsilon,
                              double delta,
                              uint32_t sensitivity,
                              uint64_t truncation,
                              double *out);

/**
 * Writes the three boundary vertices as p_fa0, p_md0, p_fa1, p_md1, p_fa2, p_md2.
 *
 * # Safety
 * `out` must point to 6 writable doubles.
 */
enum DpnStatus dpn_tradeoff_vertices(double epsilon, double delta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPNOISE_H */
