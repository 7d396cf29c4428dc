#ifndef IDEM_H
#define IDEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IdemStatus {
  IDEM_STATUS_OK = 0,
  IDEM_STATUS_NULL_POINTER = 1,
  IDEM_STATUS_INVALID_ARGUMENT = 2,
  IDEM_STATUS_PARSE = 3,
  IDEM_STATUS_NOT_IDEMPOTENT = 4,
  IDEM_STATUS_NUMERICAL = 5,
  IDEM_STATUS_PANIC = 6,
} IdemStatus;

// Values accepted by the `kind` argument of [`idem_divergence`].
typedef enum IdemDivergenceKind {
  IDEM_DIVERGENCE_KIND_UMEGAKI = 0,
  IDEM_DIVERGENCE_KIND_PETZ = 1,
  IDEM_DIVERGENCE_KIND_SANDWICHED = 2,
  IDEM_DIVERGENCE_KIND_DMAX = 3,
  IDEM_DIVERGENCE_KIND_DMIN = 4,
  IDEM_DIVERGENCE_KIND_HYPOTHESIS_TESTING = 5,
  IDEM_DIVERGENCE_KIND_CHERNOFF = 6,
} IdemDivergenceKind;

// Channel parsed from its JSON description.
typedef struct IdemChannel IdemChannel;

// Dense complex matrix.
typedef struct IdemMatrix IdemMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the next call.
const char *idem_last_error(void);

// Library version as a static NUL-terminated string.
const char *idem_version(void);

// New `rows × cols` matrix from row-major real and imaginary parts. `im` may be null for a
// real matrix.
//
// # Safety
// `re` (and `im` when non-null) must point to `rows * cols` doubles; `out` must be writable.
enum IdemStatus idem_matrix_new(uintptr_t rows,
                                uintptr_t cols,
                                const double *re,
                                const double *im,
                                struct IdemMatrix **out);

// # Safety
// `m` must be null or a handle from [`idem_matrix_new`] not yet freed.
void idem_matrix_free(struct IdemMatrix *m);

// # Safety
// `m` must be a live matrix handle; `rows` and `cols` must be writable.
enum IdemStatus idem_matrix_dims(const struct IdemMatrix *m, uintptr_t *rows, uintptr_t *cols);

// Divergence of two density matrices in bits; `+inf` is returned as `INFINITY`.
// `param` is α for Petz and sandwiched, ε for hypothesis testing, and ignored otherwise.
//
// # Safety
// `rho` and `sigma` must be live matrix handles; `out` must be writable.
enum IdemStatus idem_divergence(const struct IdemMatrix *rho,
                                const struct IdemMatrix *sigma,
                                uint32_t kind,
                                double param,
                                double *out);

// Parses a channel (block, Choi or Kraus form) from NUL-terminated JSON.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum IdemStatus idem_channel_from_json(const char *text, struct IdemChannel **out);

// # Safety
// `ch` must be null or a handle from [`idem_channel_from_json`] not yet freed.
void idem_channel_free(struct IdemChannel *ch);

// # Safety
// `ch` must be a live channel handle; `out` must be writable.
enum IdemStatus idem_channel_dim(const struct IdemChannel *ch, uintptr_t *out);

// `D(id‖Q)` in bits, or its stabilized version when `cb` is true.
//
// # Safety
// `q` must be a live channel handle; `out` must be writable.
enum IdemStatus idem_d_idq(const struct IdemChannel *q, bool cb, double *out);

// Pimsner–Popa index of the conditional expectation `e` (linear scale), plain and stabilized.
//
// # Safety
// `e` must be a live channel handle; `c` and `c_cb` must be writable.
enum IdemStatus idem_pimsner_popa(const struct IdemChannel *e, double *c, double *c_cb);

// Full pair analysis as JSON, the same report as the `formula` command without its meta
// block. Free the string with [`idem_string_free`].
//
// # Safety
// `p` and `q` must be live channel handles; `out` must be writable.
enum IdemStatus idem_formula_json(const struct IdemChannel *p,
                                  const struct IdemChannel *q,
                                  double alpha,
                                  uint64_t seed,
                                  uint32_t restarts,
                                  char **out);

// Built-in strict counterexample as JSON. With `restarts = 0` only the seeded oracle starts
// run. Free the string with [`idem_string_free`].
//
// # Safety
// `out` must be writable.
enum IdemStatus idem_counterexample_json(uint64_t seed, uint32_t restarts, char **out);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void idem_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IDEM_H */
