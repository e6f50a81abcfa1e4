#ifndef TURNPIKE_H
#define TURNPIKE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  TP_STATUS_INVALID_ARGUMENT = 2,
  TP_STATUS_DIMENSION = 3,
  /**
   * The parameters violate a standing model assumption.
   */
  TP_STATUS_MODEL = 4,
  TP_STATUS_NUMERIC = 5,
  TP_STATUS_LOCALIZATION = 6,
  TP_STATUS_HYPERBOLICITY = 7,
  TP_STATUS_PRECONDITION = 8,
  TP_STATUS_INCONSISTENT = 9,
  TP_STATUS_DOMAIN = 10,
  TP_STATUS_PANIC = 11,
} TpStatus;

/**
 * Opaque oscillator system.
 */
typedef struct TpSystem TpSystem;

/**
 * Mode `k` (1-based): `ν_k` and the eigenvalues `σ_k^+`, `σ_k^-`. The two
 * remaining members of the quadruple are their conjugates.
 */
typedef struct TpEigenQuad {
  size_t k;
  double omega;
  double b;
  double nu_re;
  double nu_im;
  double sigma_plus_re;
  double sigma_plus_im;
  double sigma_minus_re;
  double sigma_minus_im;
  double residual;
} TpEigenQuad;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *tp_last_error_message(void);

/**
 * Builds a system from `n` frequencies and gains.
 *
 * # Safety
 * `omega` and `b` must point to `n` doubles; `out` must be writable.
 */
enum TpStatus tp_system_new(const double *omega, const double *b, size_t n, struct TpSystem **out);

/**
 * Builds the first `n` modes of the beam with stiffness ratio `c`, length
 * `l` and hub offset `d`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TpStatus tp_system_beam(size_t n, double c, double l, double d, struct TpSystem **out);

/**
 * # Safety
 * `sys` must come from a constructor here and not be freed twice. Null is
 * ignored.
 */
void tp_system_free(struct TpSystem *sys);

/**
 * Number of modes, 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t tp_system_len(const struct TpSystem *sys);

/**
 * Copies the frequencies and gains into `omega` and `b`, each of length
 * `tp_system_len(sys)`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum TpStatus tp_system_params(const struct TpSystem *sys, double *omega, double *b);

/**
 * Minimal time for exact controllability.
 *
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
enum TpStatus tp_min_control_time(const struct TpSystem *sys, double *out);

/**
 * `V_{p,q}` norm of the state `(xi, eta)`, each of length `tp_system_len`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum TpStatus tp_weighted_norm(const struct TpSystem *sys,
                               const double *xi,
                               const double *eta,
                               double p,
                               double q,
                               double *out);

/**
 * Optimal steady state for target `(xbar_xi, xbar_eta, ubar)`. Writes
 * `x̂` into `xhat_xi`/`xhat_eta`, the costate into `lambda`/`mu` (all of
 * length `N`) and the control into `uhat`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum TpStatus tp_solve_static(const struct TpSystem *sys,
                              const double *xbar_xi,
                              const double *xbar_eta,
                              double ubar,
                              double *xhat_xi,
                              double *xhat_eta,
                              double *lambda,
                              double *mu,
                              double *uhat);

/**
 * Eigenvalue quadruple of mode `k` (1-based).
 *
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
enum TpStatus tp_find_nu(const struct TpSystem *sys, size_t k, struct TpEigenQuad *out);

/**
 * All `N` quadruples, written to `out[0..N]`; `capacity` must be at least `N`.
 *
 * # Safety
 * `out` must be valid for `capacity` elements.
 */
enum TpStatus tp_spectrum(const struct TpSystem *sys, struct TpEigenQuad *out, size_t capacity);

/**
 * Optimal trajectory on `[0, horizon]` sampled at `samples` uniform times.
 *
 * Outputs, row-major per sample: `times[samples]`,
 * `state[samples × 2N]` as `(ξ, η)`, `costate[samples × 2N]` as `(λ, μ)`,
 * `control[samples]`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum TpStatus tp_solve_bvp(const struct TpSystem *sys,
                           const double *xbar_xi,
                           const double *xbar_eta,
                           double ubar,
                           const double *x0_xi,
                           const double *x0_eta,
                           double horizon,
                           size_t samples,
                           double *times,
                           double *state_out,
                           double *costate_out,
                           double *control);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TURNPIKE_H */
