#ifndef KGEN_H
#define KGEN_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `KGEN_STATUS_OK` is zero.
 */
typedef enum KgenStatus {
  KGEN_STATUS_OK = 0,
  KGEN_STATUS_NULL_POINTER = 1,
  KGEN_STATUS_INVALID_ARGUMENT = 2,
  KGEN_STATUS_IO = 3,
  KGEN_STATUS_PARSE = 4,
  KGEN_STATUS_INVALID_DATA = 5,
  KGEN_STATUS_INVALID_CONFIG = 6,
  KGEN_STATUS_NO_SOLUTION = 7,
  KGEN_STATUS_BUFFER_TOO_SMALL = 8,
  KGEN_STATUS_PANIC = 9,
} KgenStatus;

typedef enum KgenAlgorithm {
  KGEN_ALGORITHM_EXHAUSTIVE = 0,
  KGEN_ALGORITHM_OLA = 1,
  KGEN_ALGORITHM_KGEN = 2,
  KGEN_ALGORITHM_RANDOM = 3,
} KgenAlgorithm;

/**
 * Outcome of one search.
 */
typedef struct KgenResult KgenResult;

/**
 * A loaded dataset with its config and generalization hierarchies.
 */
typedef struct KgenSession KgenSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next kgen call on the same thread.
 */
const char *kgen_last_error(void);

/**
 * Loads a dataset and its TOML config. `delimiter` is the CSV field
 * separator byte (0 means ',').
 *
 * # Safety
 * `dataset_path` and `config_path` must be NUL-terminated strings and `out`
 * must point to writable storage for one pointer.
 */
enum KgenStatus kgen_session_open(const char *dataset_path,
                                  const char *config_path,
                                  char delimiter,
                                  struct KgenSession **out);

/**
 * # Safety
 * `session` must be null or a pointer from `kgen_session_open` not yet freed.
 */
void kgen_session_free(struct KgenSession *session);

/**
 * Number of quasi-identifiers, or 0 for a null session.
 *
 * # Safety
 * `session` must be null or a live session.
 */
size_t kgen_session_qi_count(const struct KgenSession *session);

/**
 * Number of dataset rows, or 0 for a null session.
 *
 * # Safety
 * `session` must be null or a live session.
 */
size_t kgen_session_row_count(const struct KgenSession *session);

/**
 * Height of the `index`-th quasi-identifier's hierarchy, or 0 when out of range.
 *
 * # Safety
 * `session` must be null or a live session.
 */
uint32_t kgen_session_height(const struct KgenSession *session, size_t index);

/**
 * Runs one search with the session's config, overriding the suppression
 * threshold and RNG seed. Returns `KGEN_STATUS_NO_SOLUTION` when no
 * feasible node was found.
 *
 * # Safety
 * `session` must be a live session and `out` writable.
 */
enum KgenStatus kgen_session_run(const struct KgenSession *session,
                                 enum KgenAlgorithm algorithm,
                                 double suppression_threshold,
                                 uint64_t seed,
                                 struct KgenResult **out);

/**
 * # Safety
 * `result` must be null or a pointer from `kgen_session_run` not yet freed.
 */
void kgen_result_free(struct KgenResult *result);

/**
 * Copies the solution's levels into `buffer` and stores the dimension in
 * `len`. With a null or short buffer only `len` is written and
 * `KGEN_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `result` must be live, `len` writable and `buffer` null or valid for
 * `capacity` elements.
 */
enum KgenStatus kgen_result_levels(const struct KgenResult *result,
                                   uint32_t *buffer,
                                   size_t capacity,
                                   size_t *len);

/**
 * Precision of the solution, NaN for a null result.
 *
 * # Safety
 * `result` must be null or live.
 */
double kgen_result_precision(const struct KgenResult *result);

/**
 * Fraction of rows suppressed, NaN for a null result.
 *
 * # Safety
 * `result` must be null or live.
 */
double kgen_result_suppression(const struct KgenResult *result);

/**
 * Nodes evaluated by the search, 0 for a null result.
 *
 * # Safety
 * `result` must be null or live.
 */
size_t kgen_result_evaluations(const struct KgenResult *result);

/**
 * Writes the anonymized dataset as comma-separated CSV.
 *
 * # Safety
 * `session` and `result` must be live and `path` NUL-terminated.
 */
enum KgenStatus kgen_result_write_csv(const struct KgenSession *session,
                                      const struct KgenResult *result,
                                      const char *path);

/**
 * Mean of `levels[i] / heights[i]`.
 *
 * # Safety
 * `levels` and `heights` must be valid for `len` elements and `out` writable.
 */
enum KgenStatus kgen_precision(const uint32_t *levels,
                               const uint32_t *heights,
                               size_t len,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KGEN_H */
