#ifndef DGMEM_H
#define DGMEM_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum DgmemStatus {
  DGMEM_STATUS_OK = 0,
  DGMEM_STATUS_NULL_POINTER = 1,
  DGMEM_STATUS_INVALID_ARGUMENT = 2,
  DGMEM_STATUS_UNKNOWN_EXAMPLE = 3,
  DGMEM_STATUS_SOLVER_FAILURE = 4,
  DGMEM_STATUS_OUT_OF_RANGE = 5,
  DGMEM_STATUS_NO_EXACT_SOLUTION = 6,
  DGMEM_STATUS_PANIC = 7,
} DgmemStatus;

/**
 * Problem definition (kernel, operator, data).
 */
typedef struct DgmemProblem DgmemProblem;

/**
 * Rows of a convergence study.
 */
typedef struct DgmemReport DgmemReport;

/**
 * Discrete space-time solution.
 */
typedef struct DgmemSolution DgmemSolution;

/**
 * One row of a convergence study. Missing rates are NaN.
 */
typedef struct DgmemRow {
  size_t n;
  size_t m;
  double e_sup;
  double rate_sup;
  double e_l2rho;
  double rate_l2rho;
} DgmemRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *dgmem_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dgmem_version(void);

/**
 * Builds a registered example (`ex1`, `ex2`, `ex3`, `zero`, `custom`).
 *
 * `kernel` may be NULL to keep the example's kernel. On success `*out`
 * receives a handle to release with [`dgmem_problem_free`].
 *
 * # Safety
 * `example` must be a NUL-terminated string, `kernel` NULL or one, and
 * `out` a valid pointer.
 */
enum DgmemStatus dgmem_problem_new(const char *example,
                                   const char *kernel,
                                   double t_end,
                                   struct DgmemProblem **out);

/**
 * Releases a problem. NULL is ignored.
 *
 * # Safety
 * `problem` must come from [`dgmem_problem_new`] and not be freed twice.
 */
void dgmem_problem_free(struct DgmemProblem *problem);

/**
 * Number of solution components of a problem (0 for NULL).
 *
 * # Safety
 * `problem` must be NULL or a live handle.
 */
size_t dgmem_problem_components(const struct DgmemProblem *problem);

/**
 * Solves on `cells` uniform spatial cells and `intervals` uniform time
 * intervals with spatial degree `k`, temporal degree `q` and weight `rho`.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum DgmemStatus dgmem_solve(const struct DgmemProblem *problem,
                             size_t k,
                             size_t q,
                             size_t cells,
                             size_t intervals,
                             double rho,
                             struct DgmemSolution **out);

/**
 * Releases a solution. NULL is ignored.
 *
 * # Safety
 * `solution` must come from [`dgmem_solve`] and not be freed twice.
 */
void dgmem_solution_free(struct DgmemSolution *solution);

/**
 * Writes the `n` components of `U(t, x)` (left limit in time) to `values`.
 *
 * # Safety
 * `solution` must be a live handle and `values` point to `len` doubles.
 */
enum DgmemStatus dgmem_solution_eval(const struct DgmemSolution *solution,
                                     double t,
                                     double x,
                                     double *values,
                                     size_t len);

/**
 * Errors of `solution` against the exact solution of `problem`.
 *
 * # Safety
 * Both handles must be live and the output pointers valid.
 */
enum DgmemStatus dgmem_error_norms(const struct DgmemSolution *solution,
                                   const struct DgmemProblem *problem,
                                   size_t refinement,
                                   double *e_sup,
                                   double *e_l2rho);

/**
 * Runs a convergence study on `N = M = levels[i]`.
 *
 * With `reference` nonzero errors are measured against a finer solve
 * instead of the exact solution.
 *
 * # Safety
 * `problem` must be a live handle, `levels` point to `count` values and
 * `out` be valid.
 */
enum DgmemStatus dgmem_run_convergence(const struct DgmemProblem *problem,
                                       size_t k,
                                       size_t q,
                                       const size_t *levels,
                                       size_t count,
                                       double rho,
                                       bool reference,
                                       struct DgmemReport **out);

/**
 * Number of rows of a report (0 for NULL).
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t dgmem_report_rows(const struct DgmemReport *report);

/**
 * Copies row `index` of a report.
 *
 * # Safety
 * `report` must be a live handle and `row` valid.
 */
enum DgmemStatus dgmem_report_row(const struct DgmemReport *report,
                                  size_t index,
                                  struct DgmemRow *row);

/**
 * Releases a report. NULL is ignored.
 *
 * # Safety
 * `report` must come from [`dgmem_run_convergence`] and not be freed twice.
 */
void dgmem_report_free(struct DgmemReport *report);

/**
 * Continuous and discrete weighted kernel norms of a problem's kernel on a
 * uniform mesh with `intervals` intervals and temporal degree `q`.
 *
 * # Safety
 * `problem` must be a live handle and the output pointers valid.
 */
enum DgmemStatus dgmem_kernel_norms(const struct DgmemProblem *problem,
                                    double rho,
                                    size_t intervals,
                                    size_t q,
                                    double *continuous,
                                    double *discrete);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DGMEM_H */
