#ifndef METRIC_BANDITS_H
#define METRIC_BANDITS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum MbStatus {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_POINTER = 1,
  MB_STATUS_INVALID_UTF8 = 2,
  MB_STATUS_INVALID_JSON = 3,
  MB_STATUS_INVALID_ARGUMENT = 4,
  MB_STATUS_OUT_OF_RANGE = 5,
  MB_STATUS_RUNTIME = 6,
  MB_STATUS_PANIC = 7,
} MbStatus;

// A regret curve aggregated over seeds.
typedef struct MbCurve MbCurve;

// A validated problem instance.
typedef struct MbInstance MbInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *mb_last_error(void);

// Library version as a static NUL-terminated string.
const char *mb_version(void);

// `sqrt(8 i_ph / (2 + n))`.
double mb_standard_radius(uint32_t i_ph, uint64_t n);

// `mu + 2 r`.
double mb_index(double mu, double r);

// Net scale `phase_len^(-1/(d+2))`.
double mb_naive_delta(uint64_t phase_len, double d);

// # Safety
// `out` must be NULL or point to writable memory for one `double`.
enum MbStatus mb_max_reward_one_radius(double alpha, uint64_t n, double mu, double *out);

// # Safety
// `out` must be NULL or point to writable memory for one `double`.
enum MbStatus mb_chernoff_radius(double alpha, uint64_t n, double x, double *out);

// Parse an instance from JSON (`metric`, `payoff`, `rewards`, `seed`).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum MbStatus mb_instance_from_json(const char *json, struct MbInstance **out);

// Best expected payoff of the instance.
//
// # Safety
// `inst` must be NULL or a live handle.
double mb_instance_mu_star(const struct MbInstance *inst);

// # Safety
// `inst` must be NULL or a handle from [`mb_instance_from_json`] not yet freed.
void mb_instance_free(struct MbInstance *inst);

// Replicate the algorithm described by `algorithm_json` over `n_seeds`
// seeds. Results do not depend on the number of threads.
//
// # Safety
// `inst` must be a live handle, `algorithm_json` a NUL-terminated string,
// `seeds` readable for `n_seeds` values and `out` writable.
enum MbStatus mb_replicate(const struct MbInstance *inst,
                           const char *algorithm_json,
                           uint64_t horizon,
                           const uint64_t *seeds,
                           uintptr_t n_seeds,
                           struct MbCurve **out);

// Number of checkpoints, 0 for NULL.
//
// # Safety
// `curve` must be NULL or a live handle.
uintptr_t mb_curve_len(const struct MbCurve *curve);

// Checkpoint `k`: round, mean regret and its standard error.
//
// # Safety
// `curve` must be a live handle; the out pointers must be writable.
enum MbStatus mb_curve_point(const struct MbCurve *curve,
                             uintptr_t k,
                             uint64_t *t,
                             double *mean,
                             double *stderr);

// Fitted regret exponent over the last `window_fraction` of checkpoints.
// Writes NaN when the window holds a zero regret.
//
// # Safety
// `curve` must be a live handle and `gamma` writable.
enum MbStatus mb_curve_fit_exponent(const struct MbCurve *curve,
                                    double window_fraction,
                                    double *gamma);

// # Safety
// `curve` must be NULL or a handle from [`mb_replicate`] not yet freed.
void mb_curve_free(struct MbCurve *curve);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METRIC_BANDITS_H */
