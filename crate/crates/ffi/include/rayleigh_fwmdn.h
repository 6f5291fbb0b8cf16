#ifndef RAYLEIGH_FWMDN_H
#define RAYLEIGH_FWMDN_H

/* Generated by cbindgen from rayleigh-fwmdn-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every fallible function.
 */
typedef enum {
  RWFM_STATUS_OK = 0,
  RWFM_STATUS_NULL_POINTER = 1,
  RWFM_STATUS_INVALID_ARGUMENT = 2,
  RWFM_STATUS_NO_ROOT = 3,
  RWFM_STATUS_ILL_CONDITIONED = 4,
  RWFM_STATUS_IO = 5,
  RWFM_STATUS_BAD_CHECKPOINT = 6,
  RWFM_STATUS_PANIC = 7,
} RwfmStatus;

/**
 * Opaque trained-model handle.
 */
typedef struct RwfmModel RwfmModel;

/**
 * Opaque layered-medium handle.
 */
typedef struct RwfmStack RwfmStack;

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rwfm_last_error(void);

/**
 * Static version string of the underlying crate.
 */
const char *rwfm_version(void);

/**
 * Builds a layered model from `n_layers` S-wave velocities [km/s]
 * (surface first; the last layer is the half-space) with a common layer
 * thickness [km]. The remaining elastic parameters follow the empirical
 * crustal relations. Returns null on invalid input (see
 * [`rwfm_last_error`]).
 *
 * # Safety
 * `vs` must point to `n_layers` readable doubles.
 */
RwfmStack *rwfm_stack_new(const double *vs, uintptr_t n_layers, double thickness_km);

/**
 * Frees a stack handle. Null is ignored.
 *
 * # Safety
 * `stack` must be a pointer from [`rwfm_stack_new`], not yet freed.
 */
void rwfm_stack_free(RwfmStack *stack);

/**
 * Number of angular frequencies in the default grid.
 */
uintptr_t rwfm_default_grid_len(void);

/**
 * Writes the default 50-point angular-frequency grid [rad/s].
 *
 * # Safety
 * `out` must point to `len >= rwfm_default_grid_len()` writable doubles.
 */
RwfmStatus rwfm_default_grid(double *out, uintptr_t len);

/**
 * Fundamental-mode phase velocity [km/s] at one angular frequency.
 *
 * # Safety
 * `out_velocity` must be writable; `stack` must be a live handle.
 */
RwfmStatus rwfm_phase_velocity(const RwfmStack *stack, double omega, double *out_velocity);

/**
 * Dispersion curve over a strictly increasing frequency grid:
 * `out_velocities[i]` receives the phase velocity at `omegas[i]`.
 *
 * # Safety
 * `omegas` and `out_velocities` must each point to `n_omegas` doubles.
 */
RwfmStatus rwfm_dispersion_curve(const RwfmStack *stack,
                                 const double *omegas,
                                 uintptr_t n_omegas,
                                 double *out_velocities);

/**
 * Loads a trained checkpoint (JSON) from a NUL-terminated path. Returns
 * null on failure.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
RwfmModel *rwfm_model_load(const char *path);

/**
 * Frees a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be a pointer from [`rwfm_model_load`], not yet freed.
 */
void rwfm_model_free(RwfmModel *model);

/**
 * Input width the model expects (0 for a null handle).
 *
 * # Safety
 * `model` must be a live handle or null.
 */
uintptr_t rwfm_model_input_dim(const RwfmModel *model);

/**
 * Number of candidate profiles the model outputs: the mixture component
 * count for an MDN head, 1 for a plain regression head.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
uintptr_t rwfm_model_num_candidates(const RwfmModel *model);

/**
 * Width of one candidate profile.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
uintptr_t rwfm_model_profile_dim(const RwfmModel *model);

/**
 * Runs the inversion: writes the candidate profiles row-major,
 * `num_candidates x profile_dim` doubles.
 *
 * # Safety
 * `input` must hold `input_len` doubles; `out` must hold `out_len`
 * doubles with `out_len >= num_candidates * profile_dim`.
 */
RwfmStatus rwfm_predict_profiles(const RwfmModel *model,
                                 const double *input,
                                 uintptr_t input_len,
                                 double *out,
                                 uintptr_t out_len);

#endif  /* RAYLEIGH_FWMDN_H */
