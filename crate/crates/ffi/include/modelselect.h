#ifndef MODELSELECT_H
#define MODELSELECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_ARGUMENT = 1,
  MS_STATUS_INVALID_UTF8 = 2,
  MS_STATUS_INVALID_ARGUMENT = 3,
  MS_STATUS_NOT_FOUND = 4,
  MS_STATUS_SNAPSHOT = 5,
  MS_STATUS_INTERNAL = 6,
} MsStatus;

// An opened snapshot. Opaque to C.
typedef struct MsGraph MsGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Opens the snapshot directory `dir`. On success `*out` holds a handle to
// release with `ms_graph_free`.
//
// # Safety
// `dir` must be a NUL-terminated string; `out` must be writable.
enum MsStatus ms_graph_open(const char *dir, struct MsGraph **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `g` must come from `ms_graph_open` and not be used afterwards.
void ms_graph_free(struct MsGraph *g);

// Runs a recommendation. `request` is the JSON body accepted by
// `POST /api/recommend`; `*out` receives the canonical JSON response.
//
// # Safety
// Pointers must be valid; `request` NUL-terminated.
enum MsStatus ms_recommend_json(const struct MsGraph *g, const char *request, char **out);

// Entities and edges within `depth` hops of `id`, as JSON.
//
// # Safety
// Pointers must be valid; `id` NUL-terminated.
enum MsStatus ms_subgraph_json(const struct MsGraph *g, const char *id, uint32_t depth, char **out);

// Corpus statistics as JSON.
//
// # Safety
// Pointers must be valid.
enum MsStatus ms_stats_json(const struct MsGraph *g, char **out);

// Number of integrity violations in the snapshot; 0 for a sound graph.
//
// # Safety
// Pointers must be valid.
enum MsStatus ms_validate(const struct MsGraph *g, size_t *violations);

// The snapshot version string.
//
// # Safety
// Pointers must be valid.
enum MsStatus ms_snapshot_version(const struct MsGraph *g, char **out);

// Releases a string returned through an `out` parameter. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void ms_string_free(char *s);

// Message of the last failed call on this thread, or null. Valid until the
// next call on the same thread.
const char *ms_last_error(void);

// Library version, static.
const char *ms_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MODELSELECT_H */
