/* C interface of the dayflow library. Generated — do not edit. */

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call. Zero means success; everything
// else leaves a message for [`df_last_error_message`].
typedef enum DfStatus {
  DF_STATUS_OK = 0,
  // A required pointer argument was null.
  DF_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  DF_STATUS_INVALID_UTF8 = 2,
  // Malformed input: unknown group kind, bad JSON, bad parameters.
  DF_STATUS_INVALID_ARGUMENT = 3,
  // The operation is undefined for this group kind.
  DF_STATUS_UNSUPPORTED = 4,
  // An enumeration or size cap was exceeded.
  DF_STATUS_RESOURCE_LIMIT = 5,
  // A precondition on the inputs failed.
  DF_STATUS_PRECONDITION = 6,
  // The solver could not reach an optimal basis.
  DF_STATUS_SOLVER = 7,
  // An internal invariant failed (including caught panics).
  DF_STATUS_INTERNAL = 8,
} DfStatus;

// An opaque group handle: a parsed, validated group description.
typedef struct DfGroup DfGroup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The library version as a static NUL-terminated string. Never null;
// do not free.
const char *df_version(void);

// The message of the most recent failure on this thread, as a
// NUL-terminated string. Valid until the next failing call on the same
// thread; never null; do not free.
const char *df_last_error_message(void);

// Parse a group description, e.g. `{"kind": "zd", "d": 2}` or
// `{"kind": "free_group", "rank": 2}`, into a fresh handle written to
// `*out`. The handle must be released with [`df_group_free`].
//
// # Safety
// `json` must be null or a valid NUL-terminated string, and `out` must
// be null or valid for a single pointer write.
enum DfStatus df_group_parse(const char *json, struct DfGroup **out);

// Release a group handle. Null is a no-op.
//
// # Safety
// `group` must be null or a pointer obtained from [`df_group_parse`]
// that has not been freed yet.
void df_group_free(struct DfGroup *group);

// Write the group's display label (e.g. `zd:2`) to `*out` as a fresh
// string owned by the caller.
//
// # Safety
// `group` must be a valid handle; `out` must be null or valid for a
// single pointer write.
enum DfStatus df_group_label(const struct DfGroup *group, char **out);

// Write the number of elements within word-metric distance `radius` of
// the identity to `*out`.
//
// # Safety
// `group` must be a valid handle; `out` must be null or valid for a
// single `uint64_t` write.
enum DfStatus df_ball_size(const struct DfGroup *group, uint32_t radius, uint64_t *out);

// Write the worst per-generator total-variation defect of the uniform
// mean on the radius-`radius` ball to `*out`.
//
// # Safety
// `group` must be a valid handle; `out` must be null or valid for a
// single `double` write.
enum DfStatus df_folner_defect(const struct DfGroup *group, uint32_t radius, double *out);

// Minimize the worst per-generator total-variation defect over means
// supported on the radius-`radius` ball and write a JSON report to
// `*out_json`: `{"group", "radius", "kind", "max_defect", "lp_status",
// "measure", "generator_defects"}`. The string is owned by the caller.
//
// # Safety
// `group` must be a valid handle; `out_json` must be null or valid for
// a single pointer write.
enum DfStatus df_solve_tv(const struct DfGroup *group, uint32_t radius, char **out_json);

// Compute the defect profile for radii `0..=max_radius` and write it to
// `*out_csv` as CSV with header
// `r,group,kind,folner_defect,lp_defect,lp_status,millis`. The string
// is owned by the caller.
//
// # Safety
// `group` must be a valid handle; `out_csv` must be null or valid for a
// single pointer write.
enum DfStatus df_defect_profile_csv(const struct DfGroup *group,
                                    uint32_t max_radius,
                                    char **out_csv);

// Release a string obtained from any `df_` out-parameter. Null is a
// no-op.
//
// # Safety
// `s` must be null or a string pointer obtained from this library that
// has not been freed yet.
void df_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
