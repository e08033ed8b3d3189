#ifndef LOOPSOUP_H
#define LOOPSOUP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Zero is success.
 */
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_UTF8 = 2,
  LS_STATUS_INVALID_ARGUMENT = 3,
  LS_STATUS_INVALID_GRAPH = 4,
  LS_STATUS_NUMERICAL = 5,
  LS_STATUS_TOO_LARGE = 6,
  LS_STATUS_BUFFER_TOO_SMALL = 7,
  LS_STATUS_IO = 8,
  LS_STATUS_PANIC = 9,
} LsStatus;

/**
 * Weighted graph with killing.
 */
typedef struct LsGraph LsGraph;

/**
 * Precomputed loop-length law for one graph.
 */
typedef struct LsPlan LsPlan;

/**
 * One sampled soup.
 */
typedef struct LsSoup LsSoup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ls_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to fit). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ls_last_error_message(char *buf, size_t len);

/**
 * Parses a graph from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum LsStatus ls_graph_from_json(const char *json, struct LsGraph **out);

/**
 * Complete graph on `n` vertices, unit conductances, uniform killing `kappa`.
 *
 * # Safety
 * `out` must be writable.
 */
enum LsStatus ls_graph_complete(size_t n, double kappa, struct LsGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from this library not yet freed.
 */
void ls_graph_free(struct LsGraph *g);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t ls_graph_vertex_count(const struct LsGraph *g);

/**
 * Total loop mass of the graph.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum LsStatus ls_total_mass(const struct LsGraph *g, double *out);

/**
 * Probability that the soup clusters at intensity `alpha` refine the
 * partition given by `labels` (one block label per vertex, `n` entries).
 *
 * # Safety
 * `g` must be a live handle, `labels` must point to `n` values, `out` writable.
 */
enum LsStatus ls_prob_finer(const struct LsGraph *g,
                            const uint32_t *labels,
                            size_t n,
                            double alpha,
                            double *out);

/**
 * Builds a sampling plan whose length cutoff leaves tail mass below `eps_tail`.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum LsStatus ls_plan_build(const struct LsGraph *g, double eps_tail, struct LsPlan **out);

/**
 * # Safety
 * `p` must be null or a live plan handle.
 */
void ls_plan_free(struct LsPlan *p);

/**
 * Longest loop length the plan samples, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
size_t ls_plan_max_length(const struct LsPlan *p);

/**
 * Samples one soup. The same (seed, replica) always gives the same soup.
 *
 * # Safety
 * `g` and `plan` must be live handles, `plan` built from `g`; `out` writable.
 */
enum LsStatus ls_soup_sample(const struct LsGraph *g,
                             const struct LsPlan *plan,
                             double alpha,
                             uint64_t seed,
                             uint64_t replica,
                             struct LsSoup **out);

/**
 * # Safety
 * `s` must be null or a live soup handle.
 */
void ls_soup_free(struct LsSoup *s);

/**
 * Number of loops in the soup, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live soup handle.
 */
size_t ls_soup_loop_count(const struct LsSoup *s);

/**
 * Writes the cluster label of each vertex into `out` (`len` must be at least
 * the vertex count). Labels are numbered by first appearance.
 *
 * # Safety
 * `s` must be a live soup handle; `out` must point to `len` writable values.
 */
enum LsStatus ls_soup_cluster_labels(const struct LsSoup *s, uint32_t *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOOPSOUP_H */
