#ifndef XTALK_H
#define XTALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum XtalkStatus {
  XTALK_STATUS_OK = 0,
  XTALK_STATUS_NULL_POINTER = 1,
  XTALK_STATUS_INVALID_UTF8 = 2,
  XTALK_STATUS_CONFIG = 3,
  XTALK_STATUS_INVALID_INPUT = 4,
  XTALK_STATUS_NON_CLOSED_PULSE = 5,
  XTALK_STATUS_OPTIMIZATION_FAILURE = 6,
  XTALK_STATUS_TRUNCATION = 7,
  XTALK_STATUS_IO = 8,
  XTALK_STATUS_BUFFER_TOO_SMALL = 9,
  XTALK_STATUS_CHECKS_FAILED = 10,
  XTALK_STATUS_PANIC = 99,
} XtalkStatus;

/**
 * Opaque handle to a resolved experiment configuration.
 */
typedef struct XtalkExperiment XtalkExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *xtalk_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *xtalk_version(void);

/**
 * Builds an experiment from a JSON configuration.
 *
 * # Safety
 * `json` must be a valid C string and `out` a writable pointer.
 */
enum XtalkStatus xtalk_experiment_from_json(const char *json, struct XtalkExperiment **out);

/**
 * Builds an experiment from a named preset (`tableI` or `tableII`),
 * followed by `n_overrides` `key.path=value` strings.
 *
 * # Safety
 * `name` must be a valid C string, `overrides` an array of `n_overrides`
 * valid C strings (or null when zero), and `out` a writable pointer.
 */
enum XtalkStatus xtalk_experiment_from_preset(const char *name,
                                              const char *const *overrides,
                                              size_t n_overrides,
                                              struct XtalkExperiment **out);

/**
 * Releases an experiment. Null is ignored.
 *
 * # Safety
 * `exp` must come from this library and not be used afterwards.
 */
void xtalk_experiment_free(struct XtalkExperiment *exp);

/**
 * Number of ions in the experiment's chain, or 0 for null.
 *
 * # Safety
 * `exp` must be null or a live experiment.
 */
size_t xtalk_experiment_n_ions(const struct XtalkExperiment *exp);

/**
 * Resolved configuration as JSON.
 *
 * # Safety
 * `exp` must be a live experiment and `out` a writable pointer.
 */
enum XtalkStatus xtalk_experiment_config_json(const struct XtalkExperiment *exp, char **out);

/**
 * Fixed-phase sweep of `scheme` at `n_gates` gates. Writes
 * `n_phis × n_ions` populations (row per phase) to `populations` and, if
 * `fidelity` is non-null, `n_phis` target fidelities.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum XtalkStatus xtalk_phase_scan(const struct XtalkExperiment *exp,
                                  const char *scheme,
                                  size_t n_gates,
                                  const double *phis,
                                  size_t n_phis,
                                  double *populations,
                                  size_t populations_len,
                                  double *fidelity);

/**
 * Envelope summary (per scheme min/max/mean and fit) as JSON.
 *
 * # Safety
 * `exp` must be a live experiment and `out` a writable pointer.
 */
enum XtalkStatus xtalk_envelope_json(const struct XtalkExperiment *exp, char **out);

/**
 * Runs a named recipe (`phase-scan`, `envelope`, `fm-optimize`, `verify`,
 * `simulate`) into `out_dir`. `circuit_path` is read by `simulate` and
 * may be null otherwise. `*passed` (if non-null) receives 1 when the
 * recipe's checks pass; a failed check also returns `ChecksFailed`.
 *
 * # Safety
 * String arguments must be valid C strings; `passed` may be null.
 */
enum XtalkStatus xtalk_run_recipe(const struct XtalkExperiment *exp,
                                  const char *recipe,
                                  const char *out_dir,
                                  const char *circuit_path,
                                  int *passed);

/**
 * `¼(1 + cos θ₁)(1 + cos θ₂)`
 */
double xtalk_bell_fidelity_analytic(double theta1, double theta2);

/**
 * `½(1 − cos θ₁ cos θ₂)`
 */
double xtalk_spectator_population_analytic(double theta1, double theta2);

/**
 * Gate angles of one calibrated MS gate of angle `theta` at `phi_beam`.
 * Layout: `[θ, (ion, θ₁, θ₂, φ) per spectator term]`; `*len` receives the
 * number of values needed, also when the buffer is too small.
 *
 * # Safety
 * `out` must be valid for `cap` values and `len` writable.
 */
enum XtalkStatus xtalk_crosstalk_angles(const struct XtalkExperiment *exp,
                                        double theta,
                                        double phi_beam,
                                        double *out,
                                        size_t cap,
                                        size_t *len);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void xtalk_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XTALK_H */
