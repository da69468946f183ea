#ifndef CURESIM_H
#define CURESIM_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code for every API call.
 */
typedef enum CuresimStatus {
  CURESIM_STATUS_OK = 0,
  CURESIM_STATUS_NULL_POINTER = 1,
  CURESIM_STATUS_INVALID_ARGUMENT = 2,
  CURESIM_STATUS_PARSE_ERROR = 3,
  CURESIM_STATUS_GRAPH_TOO_LARGE = 4,
  CURESIM_STATUS_SIMULATION_ERROR = 5,
  CURESIM_STATUS_BUFFER_TOO_SMALL = 6,
  CURESIM_STATUS_UTF8_ERROR = 7,
} CuresimStatus;

/**
 * Opaque graph handle.
 */
typedef struct CuresimGraph CuresimGraph;

/**
 * Opaque handle to a full impedance table for one graph.
 */
typedef struct CuresimImpedanceTable CuresimImpedanceTable;

/**
 * Monte Carlo estimate of the mean extinction time.
 *
 * `count` is the number of runs that actually reached extinction and
 * therefore entered the mean; `censored` is the number that hit a cap.
 */
typedef struct CuresimSummary {
  double mean;
  double variance;
  double half_width_99;
  uint64_t count;
  uint64_t censored;
} CuresimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a graph from a textual spec: `line:N`, `grid:RxC`, `complete:N`,
 * or a path to an edge-list file (`n m` header, then one `u v` pair per line).
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum CuresimStatus curesim_graph_parse(const char *spec, struct CuresimGraph **out);

/**
 * Builds a graph on `n` nodes from `pairs` edges stored as a flat array
 * `[u0, v0, u1, v1, ...]` of length `2 * pairs`. Duplicate edges are merged.
 *
 * # Safety
 * `edges` must point to `2 * pairs` readable elements (may be NULL when
 * `pairs` is zero); `out` must be a valid pointer.
 */
enum CuresimStatus curesim_graph_from_edges(uintptr_t n,
                                            const uintptr_t *edges,
                                            uintptr_t pairs,
                                            struct CuresimGraph **out);

/**
 * Releases a graph handle. NULL is ignored.
 *
 * # Safety
 * `g` must have come from this library and not been freed before.
 */
void curesim_graph_free(struct CuresimGraph *g);

/**
 * # Safety
 * `g` and `out` must be valid pointers.
 */
enum CuresimStatus curesim_graph_node_count(const struct CuresimGraph *g, uintptr_t *out);

/**
 * # Safety
 * `g` and `out` must be valid pointers.
 */
enum CuresimStatus curesim_graph_edge_count(const struct CuresimGraph *g, uintptr_t *out);

/**
 * # Safety
 * `g` and `out` must be valid pointers.
 */
enum CuresimStatus curesim_graph_max_degree(const struct CuresimGraph *g, uintptr_t *out);

/**
 * Number of edges with exactly one endpoint in the given node set.
 *
 * # Safety
 * `g` and `out` must be valid; `nodes` must point to `len` readable elements
 * (may be NULL when `len` is zero).
 */
enum CuresimStatus curesim_cut(const struct CuresimGraph *g,
                               const uintptr_t *nodes,
                               uintptr_t len,
                               uintptr_t *out);

/**
 * Tabulates the impedance of every node subset. Requires at most 30 nodes;
 * returns `GraphTooLarge` beyond that.
 *
 * # Safety
 * `g` and `out` must be valid pointers.
 */
enum CuresimStatus curesim_table_build(const struct CuresimGraph *g,
                                       struct CuresimImpedanceTable **out);

/**
 * Releases a table handle. NULL is ignored.
 *
 * # Safety
 * `t` must have come from this library and not been freed before.
 */
void curesim_table_free(struct CuresimImpedanceTable *t);

/**
 * Impedance of the whole node set: the cutwidth of the graph.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum CuresimStatus curesim_cutwidth(const struct CuresimImpedanceTable *t, uintptr_t *out);

/**
 * Impedance of one node set: the smallest achievable maximum cut over all
 * one-at-a-time removal orders.
 *
 * # Safety
 * `t` and `out` must be valid; `nodes` must point to `len` readable elements
 * (may be NULL when `len` is zero).
 */
enum CuresimStatus curesim_impedance(const struct CuresimImpedanceTable *t,
                                     const uintptr_t *nodes,
                                     uintptr_t len,
                                     uintptr_t *out);

/**
 * Writes a removal order achieving the impedance of the given node set into
 * `buf` (exactly `len` entries). `written` receives the entry count.
 *
 * # Safety
 * `t` and `written` must be valid; `nodes` must point to `len` readable
 * elements; `buf` must have room for `buf_len` elements.
 */
enum CuresimStatus curesim_optimal_order(const struct CuresimImpedanceTable *t,
                                         const uintptr_t *nodes,
                                         uintptr_t len,
                                         uintptr_t *buf,
                                         uintptr_t buf_len,
                                         uintptr_t *written);

/**
 * Runs `replications` independent simulations and summarizes the extinction
 * time. Specs use the same grammar as the CLI: graphs as in
 * [`curesim_graph_parse`], `policy` one of `cure`, `uniform`, `degree`,
 * `none`, and `init` one of `all`, `list:v1,v2,...`, `frac:p`.
 *
 * # Safety
 * The three spec strings must be NUL-terminated; `out` must be valid.
 */
enum CuresimStatus curesim_estimate_extinction_time(const char *graph,
                                                    const char *policy,
                                                    double budget,
                                                    const char *init,
                                                    uint64_t replications,
                                                    uint64_t seed,
                                                    struct CuresimSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURESIM_H */
