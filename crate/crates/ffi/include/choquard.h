#ifndef CHOQUARD_H
#define CHOQUARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChoquardStatus {
  CHOQUARD_STATUS_OK = 0,
  CHOQUARD_STATUS_NULL_POINTER = 1,
  CHOQUARD_STATUS_INVALID_ARGUMENT = 2,
  CHOQUARD_STATUS_REGIME = 3,
  CHOQUARD_STATUS_NUMERICAL = 4,
  CHOQUARD_STATUS_MISSING_ARTIFACT = 5,
  CHOQUARD_STATUS_IO = 6,
  CHOQUARD_STATUS_PANIC = 7,
} ChoquardStatus;

/**
 * Problem parameters with their sharp constants.
 */
typedef struct ChoquardModel ChoquardModel;

/**
 * A converged or partially converged standing wave.
 */
typedef struct ChoquardSolution ChoquardSolution;

typedef struct ChoquardConstants {
  double a_alpha;
  double c_alpha;
  double s;
  double s_alpha;
  double c_nq;
  double k;
  double rho0;
  double a0;
  double bubble_level;
} ChoquardConstants;

typedef struct ChoquardSummary {
  /**
   * 0 for the ground state, 1 for the second solution.
   */
  int32_t branch;
  bool converged;
  double lambda;
  double energy;
  double grad_sq;
  double pohozaev;
  double residual;
  double tau_plus;
  double tau_minus;
  size_t iterations;
  size_t nodes;
} ChoquardSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until the next call on this thread.
 */
const char *choquard_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *choquard_version(void);

/**
 * Builds a model with mass `a`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one pointer.
 */
enum ChoquardStatus choquard_model_new(uint32_t n,
                                       double alpha,
                                       double mu,
                                       double a,
                                       double q,
                                       struct ChoquardModel **out);

/**
 * Builds a model with mass `fraction·a₀`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one pointer.
 */
enum ChoquardStatus choquard_model_new_fraction(uint32_t n,
                                                double alpha,
                                                double mu,
                                                double fraction,
                                                double q,
                                                struct ChoquardModel **out);

/**
 * # Safety
 * `model` must be null or a pointer returned by a `choquard_model_new*` function, not yet freed.
 */
void choquard_model_free(struct ChoquardModel *model);

/**
 * # Safety
 * `model` must be a live model handle and `out` valid for one write.
 */
enum ChoquardStatus choquard_model_mass(const struct ChoquardModel *model, double *out);

/**
 * # Safety
 * `model` must be a live model handle and `out` valid for one write.
 */
enum ChoquardStatus choquard_model_constants(const struct ChoquardModel *model,
                                             struct ChoquardConstants *out);

/**
 * Writes 1, 2 or 3 for the regimes Omega1, Omega2, Omega3.
 *
 * # Safety
 * `model` must be a live model handle and `out` valid for one write.
 */
enum ChoquardStatus choquard_model_regime(const struct ChoquardModel *model, int32_t *out);

/**
 * # Safety
 * `model` must be a live model handle and `out` valid for one pointer write.
 */
enum ChoquardStatus choquard_solve_ground(const struct ChoquardModel *model,
                                          struct ChoquardSolution **out);

/**
 * # Safety
 * `model` and `ground` must be live handles and `out` valid for one pointer write.
 */
enum ChoquardStatus choquard_solve_excited(const struct ChoquardModel *model,
                                           const struct ChoquardSolution *ground,
                                           struct ChoquardSolution **out);

/**
 * # Safety
 * `solution` must be null or a pointer returned by this library, not yet freed.
 */
void choquard_solution_free(struct ChoquardSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle and `out` valid for one write.
 */
enum ChoquardStatus choquard_solution_summary(const struct ChoquardSolution *solution,
                                              struct ChoquardSummary *out);

/**
 * Copies the nodes and profile values into `r` and `u`, each with room for `capacity` doubles.
 *
 * # Safety
 * `solution` must be a live handle; `r` and `u` must each point to `capacity` writable doubles.
 */
enum ChoquardStatus choquard_solution_profile(const struct ChoquardSolution *solution,
                                              double *r,
                                              double *u,
                                              size_t capacity);

/**
 * Writes the solution directory (`profile.csv`, `fiber.csv`, `meta.json`).
 *
 * # Safety
 * `solution` must be a live handle and `dir` a NUL-terminated path.
 */
enum ChoquardStatus choquard_solution_save(const struct ChoquardSolution *solution,
                                           const char *dir);

/**
 * Reads a solution directory written by `choquard_solution_save` or the CLI.
 *
 * # Safety
 * `dir` must be a NUL-terminated path and `out` valid for one pointer write.
 */
enum ChoquardStatus choquard_solution_load(const char *dir, struct ChoquardSolution **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHOQUARD_H */
