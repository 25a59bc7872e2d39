#ifndef IRSOPT_H
#define IRSOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum IrsoptStatus {
  IRSOPT_STATUS_OK = 0,
  IRSOPT_STATUS_NULL_POINTER = 1,
  IRSOPT_STATUS_INVALID_ARGUMENT = 2,
  IRSOPT_STATUS_CONFIG = 3,
  IRSOPT_STATUS_RUNTIME = 4,
  IRSOPT_STATUS_PANIC = 5,
} IrsoptStatus;

/**
 * Metrics of one simulated episode.
 */
typedef struct IrsoptRun IrsoptRun;

/**
 * Validated scenario.
 */
typedef struct IrsoptScenario IrsoptScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *irsopt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *irsopt_version(void);

/**
 * Built-in scenario: `name` is `default` or `tiny`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum IrsoptStatus irsopt_scenario_builtin(const char *name, struct IrsoptScenario **out);

/**
 * Scenario parsed from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum IrsoptStatus irsopt_scenario_from_toml(const char *toml, struct IrsoptScenario **out);

/**
 * Applies one dotted `key=value` override in place. On error the scenario
 * is unchanged.
 *
 * # Safety
 * `scenario` must come from this library; `assignment` must be a
 * NUL-terminated string.
 */
enum IrsoptStatus irsopt_scenario_set(struct IrsoptScenario *scenario, const char *assignment);

/**
 * Number of reflecting elements `M * N`.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be writable.
 */
enum IrsoptStatus irsopt_scenario_total_elements(const struct IrsoptScenario *scenario,
                                                 size_t *out);

/**
 * # Safety
 * `scenario` must be null or come from this library and not be used again.
 */
void irsopt_scenario_free(struct IrsoptScenario *scenario);

/**
 * Closed-form transmit power (W) of one device for fixed phases.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be writable.
 */
enum IrsoptStatus irsopt_optimal_power(const struct IrsoptScenario *scenario,
                                       double weight,
                                       double queue_bits,
                                       double arrival_bits,
                                       double gain,
                                       double *out);

/**
 * Per-slot drift weight of one device.
 *
 * # Safety
 * `out` must be writable.
 */
enum IrsoptStatus irsopt_slot_weight(double queue_bits,
                                     double arrival_bits,
                                     double virtual_queue_s,
                                     double avg_arrival_bits,
                                     double slot_duration_s,
                                     double *out);

/**
 * Simulates one episode. `controller` is `proposed`, `random_phase`,
 * `without_irs` or `exhaustive`.
 *
 * # Safety
 * `scenario` must come from this library; `controller` must be a
 * NUL-terminated string; `out` must be writable.
 */
enum IrsoptStatus irsopt_run_episode(const struct IrsoptScenario *scenario,
                                     const char *controller,
                                     uint64_t seed,
                                     struct IrsoptRun **out);

/**
 * Number of simulated slots.
 *
 * # Safety
 * `run` must come from this library; `out` must be writable.
 */
enum IrsoptStatus irsopt_run_horizon(const struct IrsoptRun *run, size_t *out);

/**
 * Post-burn-in averages: total power (W), virtual queue (s), delay (s).
 * Any output pointer may be null to skip it.
 *
 * # Safety
 * `run` must come from this library; non-null outputs must be writable.
 */
enum IrsoptStatus irsopt_run_averages(const struct IrsoptRun *run,
                                      double *mean_power_w,
                                      double *mean_virtual_queue_s,
                                      double *mean_delay_s);

/**
 * Copies the per-slot total power (W) into `buffer`. `len` must be at
 * least the horizon.
 *
 * # Safety
 * `run` must come from this library; `buffer` must hold `len` doubles.
 */
enum IrsoptStatus irsopt_run_total_power(const struct IrsoptRun *run, double *buffer, size_t len);

/**
 * # Safety
 * `run` must be null or come from this library and not be used again.
 */
void irsopt_run_free(struct IrsoptRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRSOPT_H */
