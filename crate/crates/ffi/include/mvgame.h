#ifndef MVGAME_FFI_H
#define MVGAME_FFI_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum MvgStatus {
  /**
   * Success.
   */
  MVG_STATUS_MVG_OK = 0,
  /**
   * A required pointer argument was null.
   */
  MVG_STATUS_MVG_NULL_ARGUMENT = 1,
  /**
   * The scenario configuration was rejected.
   */
  MVG_STATUS_MVG_CONFIG_ERROR = 2,
  /**
   * A numerical routine failed.
   */
  MVG_STATUS_MVG_NUMERICAL_ERROR = 3,
  /**
   * A string argument was not valid UTF-8.
   */
  MVG_STATUS_MVG_INVALID_UTF8 = 4,
  /**
   * An index argument was out of range.
   */
  MVG_STATUS_MVG_OUT_OF_RANGE = 5,
} MvgStatus;

/**
 * Opaque scenario handle: a validated configuration.
 */
typedef struct MvgScenario MvgScenario;

/**
 * Opaque handle over an aggregated simulation run.
 */
typedef struct MvgSummary MvgSummary;

/**
 * Opaque handle over the Monte-Carlo c/∂ₚc tables.
 */
typedef struct MvgTables MvgTables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Crate version as a static NUL-terminated string.
 */
const char *mvg_version(void);

/**
 * Message for the most recent error on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *mvg_last_error(void);

/**
 * Parses and validates a TOML scenario; on success stores a new handle in
 * `out` (release with [`mvg_scenario_free`]).
 *
 * # Safety
 * `toml_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MvgStatus mvg_scenario_from_toml(const char *toml_text, struct MvgScenario **out);

/**
 * Overrides the scenario's seed.
 *
 * # Safety
 * `scenario` must come from [`mvg_scenario_from_toml`] and not be freed.
 */
enum MvgStatus mvg_scenario_set_seed(struct MvgScenario *scenario, uint64_t seed);

/**
 * Releases a scenario handle. Null is a no-op.
 *
 * # Safety
 * `scenario` must be unfreed and not used afterwards.
 */
void mvg_scenario_free(struct MvgScenario *scenario);

/**
 * Builds (or loads from the on-disk cache) the tables for the scenario's
 * market. `cache_dir` may be null for the default cache location.
 *
 * # Safety
 * `scenario` must be a live handle, `out` a valid pointer, and `cache_dir`
 * null or NUL-terminated.
 */
enum MvgStatus mvg_tables_build(const struct MvgScenario *scenario,
                                const char *cache_dir,
                                struct MvgTables **out);

/**
 * Releases a tables handle. Null is a no-op.
 *
 * # Safety
 * `tables` must be unfreed and not used afterwards.
 */
void mvg_tables_free(struct MvgTables *tables);

/**
 * Evaluates investor `i`'s configured strategy at (t, p) and writes the
 * dollar position to `out`. `tables` may be null unless the scenario's
 * strategy needs the ∂ₚc correction.
 *
 * # Safety
 * Handles must be live (or null where allowed) and `out` a valid pointer.
 */
enum MvgStatus mvg_strategy_value(const struct MvgScenario *scenario,
                                  const struct MvgTables *tables,
                                  uintptr_t investor,
                                  double t,
                                  double p,
                                  double *out);

/**
 * Runs all configured realizations and stores an aggregated summary handle
 * in `out`. `tables` may be null unless the strategy needs them.
 *
 * # Safety
 * Handles must be live (or null where allowed) and `out` a valid pointer.
 */
enum MvgStatus mvg_simulate(const struct MvgScenario *scenario,
                            const struct MvgTables *tables,
                            struct MvgSummary **out);

/**
 * Releases a summary handle. Null is a no-op.
 *
 * # Safety
 * `summary` must be unfreed and not used afterwards.
 */
void mvg_summary_free(struct MvgSummary *summary);

/**
 * Probability that every investor defaults.
 *
 * # Safety
 * `summary` must be live and `out` a valid pointer.
 */
enum MvgStatus mvg_summary_all_default_probability(const struct MvgSummary *summary, double *out);

/**
 * Probability that at least one investor defaults.
 *
 * # Safety
 * `summary` must be live and `out` a valid pointer.
 */
enum MvgStatus mvg_summary_any_default_probability(const struct MvgSummary *summary, double *out);

/**
 * Copies the default-count histogram (index k = realizations with exactly
 * k defaults, length N+1) into `buf`, writing at most `len` entries;
 * `written` receives the full histogram length.
 *
 * # Safety
 * `summary` must be live; `buf` must point to `len` writable entries;
 * `written` must be a valid pointer.
 */
enum MvgStatus mvg_summary_histogram(const struct MvgSummary *summary,
                                     uintptr_t *buf,
                                     uintptr_t len,
                                     uintptr_t *written);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MVGAME_FFI_H */
