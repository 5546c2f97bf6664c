#ifndef FEDGDVE_H
#define FEDGDVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum FgStatus {
  FG_STATUS_OK = 0,
  FG_STATUS_NULL_POINTER = 1,
  FG_STATUS_INVALID_ARGUMENT = 2,
  FG_STATUS_SHAPE = 3,
  FG_STATUS_OUT_OF_RANGE = 4,
  FG_STATUS_PARSE = 5,
  FG_STATUS_CONFIG = 6,
  FG_STATUS_IO = 7,
  FG_STATUS_NON_FINITE = 8,
  FG_STATUS_INTERNAL = 9,
} FgStatus;

/**
 * Input file layouts.
 */
typedef enum FgFormat {
  /**
   * Tab-separated `user item rating timestamp`.
   */
  FG_FORMAT_MOVIELENS = 0,
  /**
   * Whitespace-separated `user item`, `#` comments.
   */
  FG_FORMAT_EDGE_LIST = 1,
  /**
   * `user item item ...` per line.
   */
  FG_FORMAT_ADJACENCY_LIST = 2,
} FgFormat;

/**
 * Opaque experiment configuration.
 */
typedef struct FgConfig FgConfig;

/**
 * Opaque bipartite interaction graph.
 */
typedef struct FgGraph FgGraph;

/**
 * Mean ranking metrics over evaluated users.
 */
typedef struct FgMetrics {
  double precision;
  double recall;
  double ndcg;
  size_t users;
} FgMetrics;

/**
 * Final-round outcome of a configured run.
 */
typedef struct FgRunSummary {
  size_t rounds;
  double precision;
  double recall;
  double ndcg;
  /**
   * Mean fraction of global edges kept, or -1 for methods without selection.
   */
  double selected_ratio;
} FgRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *fg_version(void);

/**
 * Bytes needed to hold the calling thread's last error message, NUL
 * included; 0 when the last call succeeded.
 */
size_t fg_last_error_length(void);

/**
 * Copies the last error message into `buf` (truncated, always
 * NUL-terminated when `len > 0`). Returns the bytes written without the NUL.
 *
 * # Safety
 * `buf` must be valid for `len` bytes of writes.
 */
size_t fg_last_error_message(char *buf, size_t len);

/**
 * Builds a graph from parallel `users`/`items` arrays of length `n`.
 * With `dedup` repeated pairs collapse; otherwise they are an error.
 *
 * # Safety
 * `users` and `items` must be valid for `n` reads; `out` for one write.
 */
enum FgStatus fg_graph_from_edges(size_t num_users,
                                  size_t num_items,
                                  const uint32_t *users,
                                  const uint32_t *items,
                                  size_t n,
                                  bool dedup,
                                  struct FgGraph **out);

/**
 * Loads a dataset file; raw ids are densely re-indexed in first-seen order.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for one write.
 */
enum FgStatus fg_graph_load(const char *path, enum FgFormat format, struct FgGraph **out);

/**
 * # Safety
 * `graph` must come from this library and not be used afterwards.
 */
void fg_graph_free(struct FgGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle or null (which yields 0).
 */
size_t fg_graph_num_users(const struct FgGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle or null (which yields 0).
 */
size_t fg_graph_num_items(const struct FgGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle or null (which yields 0).
 */
size_t fg_graph_num_edges(const struct FgGraph *graph);

/**
 * Writes the degree of every user into `out` (length `num_users`).
 *
 * # Safety
 * `graph` must be a live handle; `out` valid for `len` writes.
 */
enum FgStatus fg_graph_user_degrees(const struct FgGraph *graph, size_t *out, size_t len);

/**
 * Top-`k` precision, recall and NDCG of dot-product scores. Representations
 * are row-major (`num_users × dim`, `num_items × dim`); items in `known`
 * are excluded from each user's ranking; `test_users`/`test_items` hold
 * the held-out pairs.
 *
 * # Safety
 * Every pointer must be valid for the stated number of elements.
 */
enum FgStatus fg_evaluate(const double *user_repr,
                          size_t num_users,
                          const double *item_repr,
                          size_t num_items,
                          size_t dim,
                          const struct FgGraph *known,
                          const uint32_t *test_users,
                          const uint32_t *test_items,
                          size_t n_test,
                          size_t k,
                          struct FgMetrics *out);

/**
 * Weighted mean of `num_clients` parameter vectors of length `len`
 * (row-major in `values`), weights proportional to `weights`.
 *
 * # Safety
 * `values` valid for `num_clients * len` reads, `weights` for
 * `num_clients`, `out` for `len` writes.
 */
enum FgStatus fg_aggregate(const double *values,
                           const double *weights,
                           size_t num_clients,
                           size_t len,
                           double *out);

/**
 * Adjusted mutual information of two labelings of length `n`.
 *
 * # Safety
 * `a` and `b` valid for `n` reads; `out` for one write.
 */
enum FgStatus fg_adjusted_mutual_info(const size_t *a, const size_t *b, size_t n, double *out);

/**
 * Parses a flat TOML configuration; unknown keys and invalid values fail
 * with [`FgStatus::Config`].
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` valid for one write.
 */
enum FgStatus fg_config_from_toml(const char *toml, struct FgConfig **out);

/**
 * Overrides one key with a TOML value, e.g. `("clients", "20")`.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum FgStatus fg_config_set(struct FgConfig *config, const char *key, const char *value);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards.
 */
void fg_config_free(struct FgConfig *config);

/**
 * Runs the configured experiment, writing its outputs under the
 * configured output directory, and reports the last round.
 *
 * # Safety
 * `config` must be a live handle; `out` valid for one write.
 */
enum FgStatus fg_run_experiment(const struct FgConfig *config, struct FgRunSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEDGDVE_H */
