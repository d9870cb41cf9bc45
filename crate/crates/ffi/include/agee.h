#ifndef AGEE_H
#define AGEE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum AgeeStatus {
  AGEE_STATUS_OK = 0,
  AGEE_STATUS_NULL_POINTER = 1,
  AGEE_STATUS_INVALID_GRAPH = 2,
  AGEE_STATUS_INVALID_NODE = 3,
  AGEE_STATUS_IO = 4,
  AGEE_STATUS_FORMAT = 5,
  AGEE_STATUS_DEGENERATE_INPUT = 6,
  AGEE_STATUS_INSUFFICIENT_SUPPORT = 7,
  AGEE_STATUS_RANGE = 8,
  AGEE_STATUS_SAMPLING = 9,
  AGEE_STATUS_TRAINING_DIVERGED = 10,
  AGEE_STATUS_FIT = 11,
  AGEE_STATUS_DIMENSION_MISMATCH = 12,
  AGEE_STATUS_ALIGNMENT = 13,
  AGEE_STATUS_UNDEFINED_METRIC = 14,
  AGEE_STATUS_CONFIG = 15,
  AGEE_STATUS_BUFFER_TOO_SMALL = 16,
  AGEE_STATUS_PANIC = 99,
} AgeeStatus;

/**
 * Node embedding table.
 */
typedef struct AgeeEmbedding AgeeEmbedding;

/**
 * Nonnegative node feature matrix.
 */
typedef struct AgeeFeatures AgeeFeatures;

/**
 * Undirected simple graph.
 */
typedef struct AgeeGraph AgeeGraph;

/**
 * Walk and skip-gram settings for [`agee_embed`]. Fill with
 * [`agee_embed_options_default`] before overriding fields.
 */
typedef struct AgeeEmbedOptions {
  size_t walks_per_node;
  size_t walk_length;
  double p;
  double q;
  size_t dimensions;
  size_t window;
  size_t negatives;
  size_t epochs;
  double initial_lr;
  double final_lr;
  uint64_t seed;
} AgeeEmbedOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *agee_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *agee_version(void);

/**
 * Builds a graph from `edge_count` pairs stored as `2 * edge_count`
 * consecutive node ids. Self-loops and duplicates are dropped.
 *
 * # Safety
 * `edges` must point to `2 * edge_count` readable ids (or be null when
 * `edge_count` is 0) and `out` must be writable.
 */
enum AgeeStatus agee_graph_new(size_t node_count,
                               const uint32_t *edges,
                               size_t edge_count,
                               struct AgeeGraph **out);

/**
 * # Safety
 * `graph` must be null or a handle from this library not yet freed.
 */
void agee_graph_free(struct AgeeGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle.
 */
size_t agee_graph_node_count(const struct AgeeGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle.
 */
size_t agee_graph_edge_count(const struct AgeeGraph *graph);

/**
 * Edge count over the number of node pairs.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum AgeeStatus agee_graph_density(const struct AgeeGraph *graph, double *out);

/**
 * Copies the edges, smaller id first and in ascending order, into `out` as
 * `2 * edge_count` ids. `capacity` counts ids, not pairs.
 *
 * # Safety
 * `graph` must be a live handle and `out` must hold `capacity` ids.
 */
enum AgeeStatus agee_graph_edges(const struct AgeeGraph *graph, uint32_t *out, size_t capacity);

/**
 * Feature matrix from a row-major dense array of `rows * cols` values.
 *
 * # Safety
 * `values` must point to `rows * cols` readable doubles and `out` must be
 * writable.
 */
enum AgeeStatus agee_features_new_dense(const double *values,
                                        size_t rows,
                                        size_t cols,
                                        struct AgeeFeatures **out);

/**
 * Feature matrix in compressed sparse row form: row `r` holds
 * `indices[indptr[r]..indptr[r + 1]]` with matching `values`.
 *
 * # Safety
 * `indptr` must hold `rows + 1` entries; `indices` and `values` must hold
 * `indptr[rows]` entries; `out` must be writable.
 */
enum AgeeStatus agee_features_new_csr(size_t rows,
                                      size_t cols,
                                      const size_t *indptr,
                                      const uint32_t *indices,
                                      const double *values,
                                      struct AgeeFeatures **out);

/**
 * # Safety
 * `features` must be null or a handle from this library not yet freed.
 */
void agee_features_free(struct AgeeFeatures *features);

/**
 * Feature graph holding the `k` most similar node pairs under
 * self-information weighting. `threshold` may be null; otherwise it
 * receives the weight of the weakest selected pair.
 *
 * # Safety
 * `features` must be a live handle, `out` writable, `threshold` null or
 * writable.
 */
enum AgeeStatus agee_feature_graph_build(const struct AgeeFeatures *features,
                                         size_t k,
                                         struct AgeeGraph **out,
                                         double *threshold);

/**
 * Fills `options` with the library defaults.
 *
 * # Safety
 * `options` must be writable.
 */
enum AgeeStatus agee_embed_options_default(struct AgeeEmbedOptions *options);

/**
 * Deterministic node2vec embedding of `graph`.
 *
 * # Safety
 * `graph` must be a live handle, `options` readable, `out` writable.
 */
enum AgeeStatus agee_embed(const struct AgeeGraph *graph,
                           const struct AgeeEmbedOptions *options,
                           struct AgeeEmbedding **out);

/**
 * # Safety
 * `embedding` must be null or a handle from this library not yet freed.
 */
void agee_embedding_free(struct AgeeEmbedding *embedding);

/**
 * # Safety
 * `embedding` must be a live handle.
 */
size_t agee_embedding_node_count(const struct AgeeEmbedding *embedding);

/**
 * # Safety
 * `embedding` must be a live handle.
 */
size_t agee_embedding_dimensions(const struct AgeeEmbedding *embedding);

/**
 * Copies the vector of `node` into `out`, which holds `len` floats.
 *
 * # Safety
 * `embedding` must be a live handle and `out` must hold `len` floats.
 */
enum AgeeStatus agee_embedding_row(const struct AgeeEmbedding *embedding,
                                   uint32_t node,
                                   float *out,
                                   size_t len);

/**
 * Probability that a random positive outscores a random negative, ties
 * counting one half.
 *
 * # Safety
 * `positives` and `negatives` must hold the given number of doubles and
 * `out` must be writable.
 */
enum AgeeStatus agee_auc(const double *positives,
                         size_t positive_count,
                         const double *negatives,
                         size_t negative_count,
                         double *out);

/**
 * Elementwise `alpha * structure + (1 - alpha) * feature` over `len`
 * probabilities. `out` may alias either input.
 *
 * # Safety
 * All three arrays must hold `len` doubles.
 */
enum AgeeStatus agee_blend(const double *structure,
                           const double *feature,
                           size_t len,
                           double alpha,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGEE_H */
