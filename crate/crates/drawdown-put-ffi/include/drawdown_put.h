#ifndef DRAWDOWN_PUT_H
#define DRAWDOWN_PUT_H

/* Generated from the Rust sources by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Opaque solved pricing model. Create with `ddput_model_new`, release with
// `ddput_model_free`; safe to share between threads for reads.
typedef struct DdputModel DdputModel;

// Status code returned by every fallible call.
typedef int DdputStatus;

// The call succeeded.
#define DDPUT_OK 0

// A model or simulation parameter is out of range.
#define DDPUT_INVALID_PARAMETER 1

// The queried state is outside the admissible domain.
#define DDPUT_INVALID_STATE 2

// The parameters produce a degenerate exponent basis.
#define DDPUT_DEGENERATE_MODEL 3

// The barrier solver did not converge (or an internal computation panicked).
#define DDPUT_SOLVER_FAILED 4

// A required pointer argument was null.
#define DDPUT_NULL_POINTER 5

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a model from scalar parameters and solves the optimal barrier.
// `strike` and `cap_ratio` mirror the CLI flags: the option pays
// `(strike - S)^+` and dies when `S` falls to `S_max / cap_ratio`, so
// `cap_ratio` must exceed 1. On success `*out_model` owns the handle; on any
// error it is set to null.
//
// # Safety
// `out_model` must point to writable storage for one pointer.
DdputStatus ddput_model_new(double r,
                            double sigma,
                            double lambda,
                            double rho,
                            double strike,
                            double cap_ratio,
                            struct DdputModel **out_model);

// Releases a handle returned by `ddput_model_new`. Null is a no-op.
//
// # Safety
// `model` must be null or a handle from `ddput_model_new` that has not been
// freed already.
void ddput_model_free(struct DdputModel *model);

// Writes the optimal exercise level on the asset scale (`e^{a*}`): exercise
// is optimal the first time `S` is at or below it while the drawdown cap is
// still slack.
//
// # Safety
// `model` must be a live handle and `out_level` a valid f64 pointer.
DdputStatus ddput_optimal_barrier(const struct DdputModel *model, double *out_level);

// Writes the option value at the state `(s, smax)`, both on the asset scale
// with `0 < s <= smax`.
//
// # Safety
// `model` must be a live handle and `out_price` a valid f64 pointer.
DdputStatus ddput_price(const struct DdputModel *model, double s, double smax, double *out_price);

// Reports the voluntary-exercise rule at the running maximum `smax`: when a
// boundary exists, `*out_exists` is true and `*out_level` is the asset level
// at or below which exercising is optimal; when the cap has moved out of the
// money (no voluntary exercise), `*out_exists` is false and `*out_level` is
// 0.
//
// # Safety
// `model` must be a live handle; `out_level` and `out_exists` must be valid
// pointers.
DdputStatus ddput_exercise_boundary(const struct DdputModel *model,
                                    double smax,
                                    double *out_level,
                                    bool *out_exists);

// Runs the independent Monte Carlo estimator at the state `(s, smax)` and
// writes the sample mean, its standard error, and the worst-case bias from
// paths cut at `t_max`. Estimates are bit-reproducible for a fixed
// `(seed, n_workers)` pair.
//
// # Safety
// `model` must be a live handle; the three out pointers must be valid f64
// pointers.
DdputStatus ddput_mc_estimate(const struct DdputModel *model,
                              double s,
                              double smax,
                              uint64_t n_paths,
                              double dt,
                              double t_max,
                              uint64_t seed,
                              uint32_t n_workers,
                              double *out_mean,
                              double *out_std_err,
                              double *out_truncation_bound);

// Returns a static, nul-terminated description of a status code.
const char *ddput_status_message(DdputStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRAWDOWN_PUT_H */
