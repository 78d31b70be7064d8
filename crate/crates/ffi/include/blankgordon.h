#ifndef BLANKGORDON_H
#define BLANKGORDON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BgPolicy {
  BG_POLICY_ERROR = 0,
  BG_POLICY_CLAMP_ENDS = 1,
  BG_POLICY_LINEAR_EXTEND = 2,
  BG_POLICY_PERIODIC_EXTEND = 3,
} BgPolicy;

typedef enum BgStatus {
  BG_STATUS_OK = 0,
  BG_STATUS_NULL_POINTER = 1,
  BG_STATUS_INVALID_INPUT = 2,
  BG_STATUS_NUMERICAL = 3,
  BG_STATUS_OUT_OF_RANGE = 4,
  BG_STATUS_BUFFER_TOO_SMALL = 5,
  BG_STATUS_PANIC = 6,
} BgStatus;

/**
 * Opaque potential.
 */
typedef struct BgPotential BgPotential;

/**
 * Opaque reconstruction: spectrum, kink and nonlinearity.
 */
typedef struct BgReconstruction BgReconstruction;

/**
 * Reconstruction settings; start from `bg_options_default`.
 */
typedef struct BgOptions {
  /**
   * Grid overrides; used when `points > 0`.
   */
  double x_min;
  double x_max;
  size_t points;
  size_t mode_index;
  /**
   * Nonzero to use `a` instead of the default amplitude.
   */
  int32_t has_a;
  double a;
  int32_t has_b;
  double b;
  /**
   * Nonzero to use `e_ref` instead of the designated mode's energy.
   */
  int32_t has_e_ref;
  double e_ref;
  /**
   * Nonzero to extrapolate the mode from grids `h` and `h/2`.
   */
  int32_t refine;
  enum BgPolicy policy;
} BgOptions;

/**
 * Time-evolution settings; start from `bg_sim_options_default`.
 */
typedef struct BgSimOptions {
  double courant;
  double t_final;
  /**
   * Mode index added to the kink, or -1 for none.
   */
  int64_t perturb_mode;
  double amplitude;
} BgSimOptions;

typedef struct BgSimSummary {
  double drift;
  double energy_drift;
  /**
   * Strongest measured angular frequency, NaN when none.
   */
  double omega;
  size_t steps;
} BgSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *bg_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *bg_version(void);

/**
 * Catalog row 1..=6 with its reference data.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BgStatus bg_potential_catalog(size_t row, struct BgPotential **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BgStatus bg_potential_poschl_teller(uint32_t n, struct BgPotential **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BgStatus bg_potential_delta(double strength, struct BgPotential **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum BgStatus bg_potential_harmonic(double coefficient, struct BgPotential **out);

/**
 * Monotone-cubic interpolant through `len` samples `(xs[i], vs[i])`.
 *
 * # Safety
 * `xs` and `vs` must point to `len` readable values; `out` must be valid
 * for writes.
 */
enum BgStatus bg_potential_tabulated(const double *xs,
                                     const double *vs,
                                     size_t len,
                                     struct BgPotential **out);

/**
 * `V(x)`; fails for the delta well.
 *
 * # Safety
 * `p` must be a live handle and `value` valid for writes.
 */
enum BgStatus bg_potential_value(const struct BgPotential *p, double x, double *value);

/**
 * # Safety
 * `p` must come from a `bg_potential_*` constructor or be null.
 */
void bg_potential_free(struct BgPotential *p);

struct BgOptions bg_options_default(void);

/**
 * Solves for the designated mode and builds the kink and `F`. A null
 * `options` means `bg_options_default()`.
 *
 * # Safety
 * `p` must be a live handle, `options` null or readable, `out` writable.
 */
enum BgStatus bg_reconstruct(const struct BgPotential *p,
                             const struct BgOptions *options,
                             struct BgReconstruction **out);

/**
 * # Safety
 * `r` must come from `bg_reconstruct` or be null.
 */
void bg_reconstruction_free(struct BgReconstruction *r);

/**
 * Lowest discrete eigenvalue.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum BgStatus bg_reconstruction_ground_energy(const struct BgReconstruction *r, double *out);

/**
 * Energy shift used in `F' = V - E_ref`.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum BgStatus bg_reconstruction_e_ref(const struct BgReconstruction *r, double *out);

/**
 * Computed eigenvalues, ascending.
 *
 * # Safety
 * `r` must be a live handle; `out` must hold `capacity` values;
 * `written` must be writable.
 */
enum BgStatus bg_reconstruction_energies(const struct BgReconstruction *r,
                                         double *out,
                                         size_t capacity,
                                         size_t *written);

/**
 * Grid nodes.
 *
 * # Safety
 * As for `bg_reconstruction_energies`.
 */
enum BgStatus bg_reconstruction_grid(const struct BgReconstruction *r,
                                     double *out,
                                     size_t capacity,
                                     size_t *written);

/**
 * Kink samples on the grid.
 *
 * # Safety
 * As for `bg_reconstruction_energies`.
 */
enum BgStatus bg_reconstruction_kink(const struct BgReconstruction *r,
                                     double *out,
                                     size_t capacity,
                                     size_t *written);

/**
 * Domain `[lo, hi]` of `F`.
 *
 * # Safety
 * `r` must be a live handle; `lo` and `hi` writable.
 */
enum BgStatus bg_reconstruction_domain(const struct BgReconstruction *r, double *lo, double *hi);

/**
 * `F(u)` under the reconstruction's out-of-range policy.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum BgStatus bg_reconstruction_eval_f(const struct BgReconstruction *r, double u, double *out);

/**
 * `F'(u)`.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum BgStatus bg_reconstruction_eval_f_prime(const struct BgReconstruction *r,
                                             double u,
                                             double *out);

/**
 * Runs the verification battery; `*pass` is 1 when every check passes.
 * When `json` is non-null the report (nul-terminated) is copied into it;
 * `*needed` receives its size including the terminator.
 *
 * # Safety
 * `r` must be a live handle; `pass` and `needed` writable; `json` null or
 * writable for `capacity` bytes.
 */
enum BgStatus bg_reconstruction_verify(const struct BgReconstruction *r,
                                       int32_t *pass,
                                       char *json,
                                       size_t capacity,
                                       size_t *needed);

struct BgSimOptions bg_sim_options_default(void);

/**
 * Evolves the kink, optionally perturbed by a computed mode, with clamped
 * ends and default probes.
 *
 * # Safety
 * `r` must be a live handle, `options` null or readable, `out` writable.
 */
enum BgStatus bg_simulate(const struct BgReconstruction *r,
                          const struct BgSimOptions *options,
                          struct BgSimSummary *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BLANKGORDON_H */
