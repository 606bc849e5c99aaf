#ifndef AUCTION_IC_H
#define AUCTION_IC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible call.
 */
typedef enum AicStatus {
  AicOk = 0,
  /**
   * A required pointer argument was null.
   */
  AicNullPointer = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  AicInvalidUtf8 = 2,
  /**
   * The instance JSON could not be parsed.
   */
  AicParseError = 3,
  /**
   * The instance or mechanism tag was rejected.
   */
  AicInvalidInput = 4,
  /**
   * The computation itself failed.
   */
  AicRuntimeError = 5,
} AicStatus;

/**
 * Opaque auction instance handle.
 */
typedef struct AicInstance AicInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse an instance from its JSON representation. On success `*out` owns
 * the handle; release it with `aic_instance_free`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AicStatus aic_instance_from_json(const char *json, struct AicInstance **out);

/**
 * Release an instance handle. Null is a no-op.
 *
 * # Safety
 * `inst` must come from `aic_instance_from_json` and not be freed twice.
 */
void aic_instance_free(struct AicInstance *inst);

/**
 * Run the auction under the given mechanism tag (vcg | gsp | gfp |
 * extended-gsp | greedy-gsp | greedy-externality) and return the outcome
 * as JSON in `*out_json` (free with `aic_string_free`).
 *
 * # Safety
 * `inst` must be a live handle; `mechanism` NUL-terminated; `out_json` valid.
 */
enum AicStatus aic_run(const struct AicInstance *inst, const char *mechanism, char **out_json);

/**
 * Compute the full diagnostics report as JSON. `*envy_dominates` is set to
 * 1 when every bidder's envy bounds its regret, 0 otherwise.
 *
 * # Safety
 * Same contract as `aic_run`; `envy_dominates` may be null if unwanted.
 */
enum AicStatus aic_check(const struct AicInstance *inst,
                         const char *mechanism,
                         char **out_json,
                         int *envy_dominates);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void aic_string_free(char *s);

/**
 * Copy the calling thread's last error message (NUL-terminated, truncated
 * to `len` bytes) into `buf`. Returns the full message length in bytes,
 * excluding the NUL; 0 when no error is recorded.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes (or be null with len 0).
 */
uintptr_t aic_last_error_message(char *buf, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUCTION_IC_H */
