#ifndef RBSYNTH_H
#define RBSYNTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Property codes returned by [`rbs_verdict_property`].
 */
#define RBS_PROPERTY_NONE -1

#define RBS_PROPERTY_VALIDITY 0

#define RBS_PROPERTY_AGREEMENT 1

#define RBS_PROPERTY_INTEGRITY 2

typedef enum {
  RBS_STATUS_OK = 0,
  RBS_STATUS_NULL_POINTER = 1,
  RBS_STATUS_INVALID_UTF8 = 2,
  RBS_STATUS_PARSE_ERROR = 3,
  RBS_STATUS_CONFIG_ERROR = 4,
  RBS_STATUS_INVALID_ARGUMENT = 5,
  RBS_STATUS_INCOMPLETE = 6,
  RBS_STATUS_UNSUPPORTED = 7,
  RBS_STATUS_STATE_BUDGET = 8,
  RBS_STATUS_IO = 9,
  RBS_STATUS_PANIC = 10,
} RbsStatus;

/**
 * Parsed algorithm.
 */
typedef struct RbsAlgorithm RbsAlgorithm;

/**
 * Loaded run configuration.
 */
typedef struct RbsConfig RbsConfig;

/**
 * Oracle result, with the counterexample when there is one.
 */
typedef struct RbsVerdict RbsVerdict;

typedef struct {
  uint64_t messages_worst_case;
  uint64_t comm_steps;
  uint64_t deliver_cost;
} RbsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next `rbs_*` call on the same thread.
 */
const char *rbs_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from an `rbs_*` function and not have been freed.
 */
void rbs_string_free(char *s);

/**
 * Size of the action universe with `max_types` message types.
 */
size_t rbs_action_count(uint32_t max_types);

/**
 * Sender count required by a threshold kind (0 Zero, 1 One, 2 F+1,
 * 3 ceil((N+F)/2), 4 N-F).
 *
 * # Safety
 * `out` must be valid for writes.
 */
RbsStatus rbs_threshold_count(uint32_t kind, uint32_t n, uint32_t f, uint32_t *out);

/**
 * Parses an algorithm in the text format produced by [`rbs_algorithm_render`].
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writes.
 */
RbsStatus rbs_algorithm_parse(const char *text, RbsAlgorithm **out);

/**
 * One of the four shipped reference algorithms, numbered 1 to 4.
 *
 * # Safety
 * `out` must be valid for writes.
 */
RbsStatus rbs_algorithm_reference(uint32_t index, RbsAlgorithm **out);

/**
 * # Safety
 * `alg` must come from this library and not have been freed. Null is ignored.
 */
void rbs_algorithm_free(RbsAlgorithm *alg);

/**
 * Pseudocode text; free with [`rbs_string_free`].
 *
 * # Safety
 * `alg` must be a live handle; `out` must be valid for writes.
 */
RbsStatus rbs_algorithm_render(const RbsAlgorithm *alg, char **out);

/**
 * Canonical state key; free with [`rbs_string_free`].
 *
 * # Safety
 * `alg` must be a live handle; `out` must be valid for writes.
 */
RbsStatus rbs_algorithm_key(const RbsAlgorithm *alg, char **out);

/**
 * # Safety
 * `alg` must be a live handle; `out` must be valid for writes.
 */
RbsStatus rbs_algorithm_metrics(const RbsAlgorithm *alg, uint32_t n, uint32_t f, RbsMetrics *out);

/**
 * Shipped configuration by name (`no_failure`, `crash`, `byzantine`,
 * `modified_crash`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be valid for writes.
 */
RbsStatus rbs_config_preset(const char *name, RbsConfig **out);

/**
 * Parses configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writes.
 */
RbsStatus rbs_config_parse(const char *text, RbsConfig **out);

/**
 * Loads a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
RbsStatus rbs_config_load(const char *path, RbsConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not have been freed. Null is ignored.
 */
void rbs_config_free(RbsConfig *cfg);

/**
 * Checks `alg` under every failure mode enabled in `cfg`. A violation is a
 * successful call; inspect the verdict.
 *
 * # Safety
 * `alg` and `cfg` must be live handles; `out` must be valid for writes.
 */
RbsStatus rbs_validate(const RbsAlgorithm *alg, const RbsConfig *cfg, RbsVerdict **out);

/**
 * # Safety
 * `v` must be a live handle or null (null reads as incorrect).
 */
bool rbs_verdict_is_correct(const RbsVerdict *v);

/**
 * One of the `RBS_PROPERTY_*` codes.
 *
 * # Safety
 * `v` must be a live handle or null.
 */
int32_t rbs_verdict_property(const RbsVerdict *v);

/**
 * Scenarios explored before the verdict was reached.
 *
 * # Safety
 * `v` must be a live handle or null.
 */
size_t rbs_verdict_scenarios(const RbsVerdict *v);

/**
 * Global states visited across those scenarios.
 *
 * # Safety
 * `v` must be a live handle or null.
 */
size_t rbs_verdict_states(const RbsVerdict *v);

/**
 * Human-readable verdict including the counterexample trace; free with
 * [`rbs_string_free`].
 *
 * # Safety
 * `v` must be a live handle; `out` must be valid for writes.
 */
RbsStatus rbs_verdict_describe(const RbsVerdict *v, char **out);

/**
 * # Safety
 * `v` must come from this library and not have been freed. Null is ignored.
 */
void rbs_verdict_free(RbsVerdict *v);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RBSYNTH_H */
