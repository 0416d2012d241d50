#ifndef SGFRAME_H
#define SGFRAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum SgfStatus {
  SGF_STATUS_OK = 0,
  SGF_STATUS_NULL_POINTER = 1,
  SGF_STATUS_INVALID_ARGUMENT = 2,
  SGF_STATUS_INVALID_GRAPH = 3,
  SGF_STATUS_SIZE_MISMATCH = 4,
  SGF_STATUS_TOO_LARGE = 5,
  SGF_STATUS_PARSE = 6,
  SGF_STATUS_PROVENANCE_MISMATCH = 7,
  SGF_STATUS_NO_PARTITION = 8,
  SGF_STATUS_ZERO_SIGNAL = 9,
  SGF_STATUS_IO = 10,
  SGF_STATUS_PANIC = 11,
  SGF_STATUS_UTF8 = 12,
} SgfStatus;

typedef enum SgfLaplacian {
  SGF_LAPLACIAN_COMBINATORIAL = 0,
  SGF_LAPLACIAN_NORMALIZED = 1,
} SgfLaplacian;

// Opaque dictionary handle: the designed filter bank on one graph.
typedef struct SgfDictionary SgfDictionary;

// Opaque graph handle.
typedef struct SgfGraph SgfGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next `sgf_` call on the same thread.
const char *sgf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sgf_version(void);

// Builds a graph on `n` vertices from `m` undirected edges, each listed once.
// `weight` may be null for unit weights.
//
// # Safety
// `src`, `dst` and (if non-null) `weight` must point to `m` readable
// elements; `out` must be writable.
enum SgfStatus sgf_graph_from_edges(size_t n,
                                    const uint32_t *src,
                                    const uint32_t *dst,
                                    const double *weight,
                                    size_t m,
                                    struct SgfGraph **out);

// Reads a Matrix Market (`.mtx`, `.mm`) or edge-list CSV file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum SgfStatus sgf_graph_read(const char *path, struct SgfGraph **out);

// # Safety
// `g` must be a live graph handle or null.
size_t sgf_graph_num_vertices(const struct SgfGraph *g);

// # Safety
// `g` must be a live graph handle or null.
size_t sgf_graph_num_edges(const struct SgfGraph *g);

// # Safety
// `g` must come from this library and not be used afterwards. Null is a no-op.
void sgf_graph_free(struct SgfGraph *g);

// Designs a filter bank on `g` and builds the dictionary with every vertex
// as a center. `bank_toml` holds bank settings in the CLI's `--bank` format;
// null selects the defaults. `lanczos_steps` of 0 keeps the degree bound on
// the spectrum. The graph is copied; `g` may be freed afterwards.
//
// # Safety
// `g` must be a live graph handle, `bank_toml` null or NUL-terminated and
// `out` writable.
enum SgfStatus sgf_dictionary_new(const struct SgfGraph *g,
                                  const char *bank_toml,
                                  enum SgfLaplacian laplacian,
                                  size_t lanczos_steps,
                                  uint64_t seed,
                                  struct SgfDictionary **out);

// # Safety
// `d` must come from this library and not be used afterwards. Null is a no-op.
void sgf_dictionary_free(struct SgfDictionary *d);

// # Safety
// `d` must be a live dictionary handle or null.
size_t sgf_dictionary_num_vertices(const struct SgfDictionary *d);

// # Safety
// `d` must be a live dictionary handle or null.
size_t sgf_dictionary_num_bands(const struct SgfDictionary *d);

// Length of a coefficient buffer.
//
// # Safety
// `d` must be a live dictionary handle or null.
size_t sgf_dictionary_num_atoms(const struct SgfDictionary *d);

// Upper bound on the Laplacian spectrum used by the design.
//
// # Safety
// `d` must be a live dictionary handle or null.
double sgf_dictionary_lambda_bar(const struct SgfDictionary *d);

// Frame bounds `A <= B`.
//
// # Safety
// `d` must be a live dictionary handle; `a` and `b` writable.
enum SgfStatus sgf_dictionary_frame_bounds(struct SgfDictionary *d, double *a, double *b);

// Analysis: `coeffs[k] = <f, phi_k>` for all atoms.
//
// # Safety
// `f` must hold `n` values and `coeffs` room for `n_coeffs`.
enum SgfStatus sgf_analysis(const struct SgfDictionary *d,
                            const double *f,
                            size_t n,
                            double *coeffs,
                            size_t n_coeffs);

// Synthesis: `f = sum_k coeffs[k] phi_k`.
//
// # Safety
// `coeffs` must hold `n_coeffs` values and `f` room for `n`.
enum SgfStatus sgf_synthesis(const struct SgfDictionary *d,
                             const double *coeffs,
                             size_t n_coeffs,
                             double *f,
                             size_t n);

// Least-squares inverse of the analysis by conjugate gradient.
//
// # Safety
// `coeffs` must hold `n_coeffs` values and `f` room for `n`.
enum SgfStatus sgf_inverse_cg(const struct SgfDictionary *d,
                              const double *coeffs,
                              size_t n_coeffs,
                              double tol,
                              size_t max_iter,
                              double *f,
                              size_t n);

// SURE soft-threshold denoising of `y` with known noise level `sigma`,
// resynthesized by conjugate gradient.
//
// # Safety
// `y` must hold `n` values and `out` room for `n`.
enum SgfStatus sgf_denoise(struct SgfDictionary *d,
                           const double *y,
                           double sigma,
                           double *out,
                           size_t n);

// `t0`-sparse approximation of `f` by orthogonal matching pursuit. Writes the
// sparse coefficients (nullable) and the approximation.
//
// # Safety
// `f` must hold `n` values, `approx` room for `n` and `coeffs`, if non-null,
// room for `n_coeffs`.
enum SgfStatus sgf_compress_omp(const struct SgfDictionary *d,
                                const double *f,
                                size_t n,
                                size_t t0,
                                double *coeffs,
                                size_t n_coeffs,
                                double *approx);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGFRAME_H */
