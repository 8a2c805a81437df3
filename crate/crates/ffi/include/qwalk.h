#ifndef QWALK_H
#define QWALK_H

#pragma once

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QwStatus {
  QW_STATUS_OK = 0,
  QW_STATUS_NULL_POINTER = 1,
  QW_STATUS_INVALID_ARGUMENT = 2,
  QW_STATUS_INVALID_GRAPH = 3,
  QW_STATUS_NON_UNITARY = 4,
  QW_STATUS_NUMERICAL = 5,
  QW_STATUS_NOT_APPLICABLE = 6,
  QW_STATUS_BUFFER_TOO_SMALL = 7,
  QW_STATUS_PANIC = 8,
} QwStatus;

typedef enum QwCoin {
  QW_COIN_HADAMARD = 0,
  QW_COIN_GROVER = 1,
  QW_COIN_IDENTITY = 2,
} QwCoin;

typedef enum QwShift {
  QW_SHIFT_MOVING = 0,
  QW_SHIFT_ARC = 1,
  QW_SHIFT_IDENTITY = 2,
} QwShift;

/**
 * Opaque graph handle.
 */
typedef struct QwGraph QwGraph;

/**
 * Opaque handle to `P(0..T)` and `ρ(0..=T)`.
 */
typedef struct QwSequence QwSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next qwalk call on the same thread.
 */
const char *qw_last_error_message(void);

/**
 * NUL-terminated library version.
 */
const char *qw_version(void);

/**
 * Cycle on `n >= 3` vertices; port 0 steps `+1`, port 1 steps `-1`.
 */
enum QwStatus qw_graph_cycle(size_t n, struct QwGraph **out);

/**
 * Periodic lattice with `ndims` side lengths, each at least 3.
 *
 * # Safety
 * `dims` must point to `ndims` readable values.
 */
enum QwStatus qw_graph_torus(const size_t *dims, size_t ndims, struct QwGraph **out);

/**
 * Undirected graph from `nedges` pairs stored flat in `edges`, ports in increasing neighbor order.
 *
 * # Safety
 * `edges` must point to `2 * nedges` readable values.
 */
enum QwStatus qw_graph_from_edges(size_t n,
                                  const size_t *edges,
                                  size_t nedges,
                                  struct QwGraph **out);

/**
 * # Safety
 * `graph` must be null or a handle from a `qw_graph_*` constructor, freed once.
 */
void qw_graph_free(struct QwGraph *graph);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t qw_graph_num_vertices(const struct QwGraph *graph);

/**
 * Evolves a single walker from `|start_vertex, start_port⟩` for `horizon`
 * steps and builds the equivalent random-walk matrices.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum QwStatus qw_sequence_build(const struct QwGraph *graph,
                                enum QwCoin coin,
                                enum QwShift shift,
                                size_t start_vertex,
                                size_t start_port,
                                size_t horizon,
                                struct QwSequence **out);

/**
 * # Safety
 * `seq` must be null or a handle from `qw_sequence_build`, freed once.
 */
void qw_sequence_free(struct QwSequence *seq);

/**
 * Number of matrices `T`, or 0 for a null handle.
 *
 * # Safety
 * `seq` must be null or a live handle.
 */
size_t qw_sequence_horizon(const struct QwSequence *seq);

/**
 * Number of random-walk states.
 *
 * # Safety
 * `seq` must be null or a live handle.
 */
size_t qw_sequence_num_states(const struct QwSequence *seq);

/**
 * Copies `ρ(t)` into `buf`, which must hold `qw_sequence_num_states` values.
 *
 * # Safety
 * `seq` must be a live handle and `buf` writable for `len` values.
 */
enum QwStatus qw_sequence_rho(const struct QwSequence *seq, size_t t, double *buf, size_t len);

/**
 * Entry `p_{target, source}` of `P(t)`.
 *
 * # Safety
 * `seq` must be a live handle and `out` writable.
 */
enum QwStatus qw_sequence_entry(const struct QwSequence *seq,
                                size_t t,
                                size_t target,
                                size_t source,
                                double *out);

/**
 * Largest residual of the three matrix properties (entries in `[0, 1]`,
 * unit column sums, `P(t) ρ(t) = ρ(t+1)`).
 *
 * # Safety
 * `seq` must be a live handle and `out` writable.
 */
enum QwStatus qw_sequence_verify(const struct QwSequence *seq, double *out);

/**
 * Samples `m` trajectories of `steps` transitions into `states`, row-major
 * with `steps + 1` entries per trajectory.
 *
 * # Safety
 * `seq` must be a live handle and `states` writable for `len` values.
 */
enum QwStatus qw_sequence_sample(const struct QwSequence *seq,
                                 size_t m,
                                 size_t steps,
                                 uint64_t seed,
                                 size_t *states,
                                 size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWALK_H */
