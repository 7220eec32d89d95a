#ifndef CDMD_H
#define CDMD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdmdStatus {
  CDMD_STATUS_OK = 0,
  CDMD_STATUS_NULL_POINTER = 1,
  CDMD_STATUS_INVALID_ARGUMENT = 2,
  CDMD_STATUS_DIMENSION = 3,
  CDMD_STATUS_NON_FINITE = 4,
  /**
   * A numerical kernel failed (singular system, branch cut, no convergence).
   */
  CDMD_STATUS_NUMERICAL = 5,
  CDMD_STATUS_IO = 6,
  CDMD_STATUS_PARSE = 7,
  /**
   * Caller buffer too small; the error message states the required length.
   */
  CDMD_STATUS_BUFFER_TOO_SMALL = 8,
  CDMD_STATUS_PANIC = 9,
} CdmdStatus;

typedef enum CdmdMethod {
  CDMD_METHOD_EXACT = 0,
  CDMD_METHOD_FBDMD = 1,
  CDMD_METHOD_TLSDMD = 2,
  CDMD_METHOD_CDMD = 3,
  CDMD_METHOD_CDMD2 = 4,
} CdmdMethod;

/**
 * Output of one estimator run.
 */
typedef struct CdmdResult CdmdResult;

/**
 * Paired snapshot matrices.
 */
typedef struct CdmdSnapshots CdmdSnapshots;

/**
 * Iterative solver settings; get defaults from `cdmd_solver_options_default`.
 */
typedef struct CdmdSolverOptions {
  double rho0;
  double tau;
  /**
   * Residual ratio that triggers a penalty change.
   */
  double mu;
  double eps_abs;
  double eps_rel;
  uint64_t max_iters;
  bool adaptive_rho;
  /**
   * `cdmd2` only: weight on `‖C − I‖²`.
   */
  double nu;
  /**
   * `cdmd2` only: weight on the split-off blocks.
   */
  double mu_reg;
} CdmdSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *cdmd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cdmd_version(void);

/**
 * Builds snapshots from `x` and `y`, each `rows × cols` column-major.
 *
 * # Safety
 * `x` and `y` must point to `rows * cols` doubles; `out` must be writable.
 */
enum CdmdStatus cdmd_snapshots_new(size_t rows,
                                   size_t cols,
                                   const double *x,
                                   const double *y,
                                   double dt,
                                   struct CdmdSnapshots **out);

/**
 * Builds snapshots from a sequence `z_0 .. z_{cols-1}` (`rows × cols`,
 * column-major), giving `cols - 1` pairs.
 *
 * # Safety
 * `z` must point to `rows * cols` doubles; `out` must be writable.
 */
enum CdmdStatus cdmd_snapshots_from_sequence(size_t rows,
                                             size_t cols,
                                             const double *z,
                                             double dt,
                                             struct CdmdSnapshots **out);

/**
 * Samples the two-state linear benchmark with `n` pairs, plus Gaussian noise
 * of the given variance (0 for none).
 *
 * # Safety
 * `out` must be writable.
 */
enum CdmdStatus cdmd_gen_linear_periodic(size_t n,
                                         double noise_variance,
                                         uint64_t seed,
                                         struct CdmdSnapshots **out);

/**
 * Samples the sine-superposition benchmark with `n` pairs, plus noise.
 *
 * # Safety
 * `out` must be writable.
 */
enum CdmdStatus cdmd_gen_sine(size_t n,
                              double noise_variance,
                              uint64_t seed,
                              struct CdmdSnapshots **out);

/**
 * Reads a snapshot file; `.csv`/`.txt` are parsed as CSV, anything else as
 * the binary format.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CdmdStatus cdmd_snapshots_load(const char *path, struct CdmdSnapshots **out);

/**
 * Writes a snapshot file, choosing the format from the extension.
 *
 * # Safety
 * `snapshots` must be a live handle; `path` a NUL-terminated string.
 */
enum CdmdStatus cdmd_snapshots_save(const struct CdmdSnapshots *snapshots, const char *path);

/**
 * State dimension, number of pairs and time step.
 *
 * # Safety
 * `snapshots` must be a live handle; out-pointers must be writable.
 */
enum CdmdStatus cdmd_snapshots_shape(const struct CdmdSnapshots *snapshots,
                                     size_t *rows,
                                     size_t *cols,
                                     double *dt);

/**
 * # Safety
 * `snapshots` must be null or a handle not yet freed.
 */
void cdmd_snapshots_free(struct CdmdSnapshots *snapshots);

struct CdmdSolverOptions cdmd_solver_options_default(void);

/**
 * Reduces to rank `r` and runs `method`. `options` may be null for
 * defaults. An iterative method that hits `max_iters` still succeeds; check
 * `cdmd_result_status`.
 *
 * # Safety
 * `snapshots` must be a live handle; `options` null or valid; `out` writable.
 */
enum CdmdStatus cdmd_decompose(const struct CdmdSnapshots *snapshots,
                               enum CdmdMethod method,
                               size_t r,
                               const struct CdmdSolverOptions *options,
                               struct CdmdResult **out);

/**
 * Reduced rank actually used (may be below the requested rank).
 *
 * # Safety
 * `result` must be a live handle; `rank` writable.
 */
enum CdmdStatus cdmd_result_rank(const struct CdmdResult *result, size_t *rank);

/**
 * Copies the eigenvalues (discrete, or continuous `ln λ / dt`) into `re` and
 * `im`, each of capacity `len`. `len` must be at least the rank.
 *
 * # Safety
 * `result` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum CdmdStatus cdmd_result_eigenvalues(const struct CdmdResult *result,
                                        bool continuous,
                                        double *re,
                                        double *im,
                                        size_t len);

/**
 * Reduced forward operator `A` (`rank × rank`, column-major).
 *
 * # Safety
 * `result` must be a live handle; `dst` must hold `len` doubles.
 */
enum CdmdStatus cdmd_result_operator(const struct CdmdResult *result, double *dst, size_t len);

/**
 * Reduced backward operator `B` (`rank × rank`, column-major).
 *
 * # Safety
 * `result` must be a live handle; `dst` must hold `len` doubles.
 */
enum CdmdStatus cdmd_result_backward(const struct CdmdResult *result, double *dst, size_t len);

/**
 * DMD modes (`state_dim × rank`, column-major, complex split into `re`/`im`).
 *
 * # Safety
 * `result` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum CdmdStatus cdmd_result_modes(const struct CdmdResult *result,
                                  double *re,
                                  double *im,
                                  size_t len);

/**
 * Whether the solver met its tolerances (always true for direct methods),
 * the iteration count (0 for direct methods) and `‖AB − I‖_F`.
 *
 * # Safety
 * `result` must be a live handle; out-pointers must be writable.
 */
enum CdmdStatus cdmd_result_status(const struct CdmdResult *result,
                                   bool *converged,
                                   size_t *iterations,
                                   double *consistency);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void cdmd_result_free(struct CdmdResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDMD_H */
