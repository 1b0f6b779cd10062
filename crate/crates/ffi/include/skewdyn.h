#ifndef SKEWDYN_H
#define SKEWDYN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SkewdynStatus {
  SKEWDYN_STATUS_OK = 0,
  SKEWDYN_STATUS_NULL_POINTER = 1,
  SKEWDYN_STATUS_INVALID_PARAMS = 2,
  SKEWDYN_STATUS_DOMAIN = 3,
  SKEWDYN_STATUS_BRANCH_UNDEFINED = 4,
  SKEWDYN_STATUS_NO_CONVERGENCE = 5,
  SKEWDYN_STATUS_OUT_OF_RANGE = 6,
  SKEWDYN_STATUS_INTERNAL = 7,
} SkewdynStatus;

typedef enum SkewdynVerdict {
  SKEWDYN_VERDICT_CONVERGES_TO_FIXED_POINT = 0,
  SKEWDYN_VERDICT_FIBONACCI_ESCAPE = 1,
  SKEWDYN_VERDICT_MAXIMAL_ESCAPE = 2,
  SKEWDYN_VERDICT_UNDETERMINED = 3,
} SkewdynVerdict;

// Opaque orbit.
typedef struct SkewdynOrbit SkewdynOrbit;

// Opaque parameter set `(q, d, alpha)`.
typedef struct SkewdynParams SkewdynParams;

typedef struct SkewdynComplex {
  double re;
  double im;
} SkewdynComplex;

typedef struct SkewdynPoint {
  struct SkewdynComplex z0;
  struct SkewdynComplex z1;
  struct SkewdynComplex z2;
} SkewdynPoint;

typedef struct SkewdynGreen {
  double value;
  double error_bound;
  size_t n_used;
  bool escaped;
} SkewdynGreen;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *skewdyn_last_error_message(void);

// Creates a parameter handle.
//
// # Safety
// `out` must be valid for writes.
enum SkewdynStatus skewdyn_params_new(uint32_t q,
                                      uint32_t d,
                                      struct SkewdynComplex alpha,
                                      struct SkewdynParams **out);

// # Safety
// `params` must be null or come from [`skewdyn_params_new`], freed once.
void skewdyn_params_free(struct SkewdynParams *params);

// `Psi_alpha(p)`, or its inverse when `inverse` is set. Values beyond double
// range saturate.
//
// # Safety
// Pointers must be valid.
enum SkewdynStatus skewdyn_psi(const struct SkewdynParams *params,
                               const struct SkewdynPoint *p,
                               bool inverse,
                               struct SkewdynPoint *out);

// Orbit of `p` for up to `max_steps` steps without escape stopping.
//
// # Safety
// Pointers must be valid.
enum SkewdynStatus skewdyn_orbit_new(const struct SkewdynParams *params,
                                     const struct SkewdynPoint *p,
                                     size_t max_steps,
                                     struct SkewdynOrbit **out);

// Number of records (`n = 0..len`); 0 for a null handle.
//
// # Safety
// `orbit` must be null or a live handle.
size_t skewdyn_orbit_len(const struct SkewdynOrbit *orbit);

// Point and `ln max(|P^(n)|, |P^(n-1)|)` of record `n`.
//
// # Safety
// Pointers must be valid; `point` and `log_mag` may each be null.
enum SkewdynStatus skewdyn_orbit_get(const struct SkewdynOrbit *orbit,
                                     size_t n,
                                     struct SkewdynPoint *point,
                                     double *log_mag);

// # Safety
// `orbit` must be null or come from [`skewdyn_orbit_new`], freed once.
void skewdyn_orbit_free(struct SkewdynOrbit *orbit);

// # Safety
// Pointers must be valid.
enum SkewdynStatus skewdyn_classify(const struct SkewdynParams *params,
                                    const struct SkewdynPoint *p,
                                    size_t budget,
                                    enum SkewdynVerdict *out);

// `G+` at `p` with an error bound at most `target_error` where reachable.
//
// # Safety
// Pointers must be valid.
enum SkewdynStatus skewdyn_green_plus(const struct SkewdynParams *params,
                                      const struct SkewdynPoint *p,
                                      double target_error,
                                      struct SkewdynGreen *out);

// `p0` with `(p0, p1, p2)` on the stable manifold of the origin.
//
// # Safety
// `out` must be valid for writes.
enum SkewdynStatus skewdyn_stable_root(const struct SkewdynParams *params,
                                       struct SkewdynComplex p1,
                                       struct SkewdynComplex p2,
                                       struct SkewdynComplex *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKEWDYN_H */
