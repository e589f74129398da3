/* Generated by cbindgen from crates/ffi/src/lib.rs. */

#ifndef LOOKAHEAD_SMC_H
#define LOOKAHEAD_SMC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum {
  SMC_STATUS_OK = 0,
  SMC_STATUS_NULL_POINTER = 1,
  SMC_STATUS_CONFIG = 2,
  SMC_STATUS_NUMERICAL = 3,
  SMC_STATUS_INVALID_ARGUMENT = 4,
  SMC_STATUS_IO = 5,
  SMC_STATUS_PANIC = 6,
} SmcStatus;

/**
 * An experiment configuration.
 */
typedef struct SmcExperiment SmcExperiment;

/**
 * A finite hidden Markov model with integer observations.
 */
typedef struct SmcHmm SmcHmm;

/**
 * Metrics rows produced by a run.
 */
typedef struct SmcResults SmcResults;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *smc_last_error(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void smc_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *smc_version(void);

/**
 * Preset configuration for `kind` (`nonlinear`, `tracking` or `qam`).
 *
 * # Safety
 * `kind` must be a NUL-terminated string; `out` must be writable.
 */
SmcStatus smc_experiment_preset(const char *kind, SmcExperiment **out);

/**
 * Configuration from JSON; fields left out take the experiment's preset.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
SmcStatus smc_experiment_from_json(const char *json, SmcExperiment **out);

/**
 * The resolved configuration as JSON; release with [`smc_string_free`].
 *
 * # Safety
 * `experiment` must be a live handle; `out` must be writable.
 */
SmcStatus smc_experiment_to_json(const SmcExperiment *experiment, char **out);

/**
 * Override the number of repetitions and the seed.
 *
 * # Safety
 * `experiment` must be a live handle.
 */
SmcStatus smc_experiment_set_reps(SmcExperiment *experiment, size_t reps, uint64_t seed);

/**
 * # Safety
 * `experiment` must come from this library and not be freed twice. NULL is ignored.
 */
void smc_experiment_free(SmcExperiment *experiment);

/**
 * Run every repetition of the experiment.
 *
 * # Safety
 * `experiment` must be a live handle; `out` must be writable.
 */
SmcStatus smc_experiment_run(const SmcExperiment *experiment, SmcResults **out);

/**
 * Number of rows, repetition and pooled rows included.
 *
 * # Safety
 * `results` must be a live handle; `out` must be writable.
 */
SmcStatus smc_results_len(const SmcResults *results, size_t *out);

/**
 * Mean over repetitions of `metric` (a CSV column name such as `rmse1`, `mae1`,
 * `ber` or `mean_delta`) at the given total lookahead.
 *
 * # Safety
 * `results` must be a live handle; `metric` a NUL-terminated string; `out` writable.
 */
SmcStatus smc_results_mean(const SmcResults *results,
                           const char *metric,
                           size_t lookahead,
                           double *out);

/**
 * The rows and their summaries as CSV; release with [`smc_string_free`].
 *
 * # Safety
 * `results` must be a live handle; `out` must be writable.
 */
SmcStatus smc_results_to_csv(const SmcResults *results, char **out);

/**
 * # Safety
 * `results` must come from this library and not be freed twice. NULL is ignored.
 */
void smc_results_free(SmcResults *results);

/**
 * HMM from row-major tables: `initial[n]`, `transition[n*n]`, `emission[n*k]`.
 *
 * # Safety
 * The arrays must hold the stated number of elements; `out` must be writable.
 */
SmcStatus smc_hmm_new(size_t n_states,
                      size_t n_symbols,
                      const double *initial,
                      const double *transition,
                      const double *emission,
                      SmcHmm **out);

/**
 * # Safety
 * `hmm` must come from this library and not be freed twice. NULL is ignored.
 */
void smc_hmm_free(SmcHmm *hmm);

/**
 * Exact `P(x_t | y_{1:t+delta})` by forward-backward; `out` receives `n_states` values.
 *
 * # Safety
 * `hmm` must be a live handle, `ys` hold `len` values (`y_1..y_len`), `out` hold `n_states`.
 */
SmcStatus smc_hmm_posterior(const SmcHmm *hmm,
                            const size_t *ys,
                            size_t len,
                            size_t t,
                            size_t delta,
                            double *out);

/**
 * Particle estimate of `P(x_t | y_{1:t+delta})` with `particles` particles.
 *
 * `pilots == 0` selects exact lookahead sampling; otherwise the random-pilot scheme
 * with that many pilots per candidate. `out` receives `n_states` values.
 *
 * # Safety
 * As for [`smc_hmm_posterior`].
 */
SmcStatus smc_hmm_lookahead_filter(const SmcHmm *hmm,
                                   const size_t *ys,
                                   size_t len,
                                   size_t t,
                                   size_t delta,
                                   size_t pilots,
                                   size_t particles,
                                   uint64_t seed,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOOKAHEAD_SMC_H */
