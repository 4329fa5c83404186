#ifndef SCHRO_H
#define SCHRO_H

#include <stdbool.h>
#include <stddef.h>

typedef enum SchroStatus {
  SCHRO_STATUS_OK = 0,
  SCHRO_STATUS_NULL_POINTER = 1,
  SCHRO_STATUS_INVALID_ARGUMENT = 2,
  SCHRO_STATUS_GRID_MISMATCH = 3,
  SCHRO_STATUS_BUFFER_TOO_SMALL = 4,
  SCHRO_STATUS_NO_CONVERGENCE = 5,
  SCHRO_STATUS_SINGULAR_JACOBIAN = 6,
  SCHRO_STATUS_NOT_PROJECTABLE = 7,
  SCHRO_STATUS_NUMERICAL = 8,
  SCHRO_STATUS_IO = 9,
  SCHRO_STATUS_PANIC = 10,
} SchroStatus;

typedef enum SchroTermination {
  SCHRO_TERMINATION_STEP_LIMIT = 0,
  SCHRO_TERMINATION_LEFT_PARAMETER_WINDOW = 1,
  SCHRO_TERMINATION_NEWTON_FAILURE = 2,
  SCHRO_TERMINATION_RECONNECTED_TO_TRIVIAL = 3,
} SchroTermination;

typedef enum SchroVerdict {
  SCHRO_VERDICT_NO_POSITIVE_SOLUTION = 0,
  SCHRO_VERDICT_POSITIVE_GROUND_STATE = 1,
  SCHRO_VERDICT_EXISTS_SYMMETRIC = 2,
  SCHRO_VERDICT_UNKNOWN = 3,
} SchroVerdict;

/**
 * Traced branch handle.
 */
typedef struct SchroBranch SchroBranch;

/**
 * Radial grid handle.
 */
typedef struct SchroGrid SchroGrid;

/**
 * Scalar ground state handle.
 */
typedef struct SchroGroundState SchroGroundState;

/**
 * Summary of a Nehari minimization.
 */
typedef struct SchroNehariResult {
  double energy;
  double residual;
  double l2_u;
  double l2_v;
  size_t iterations;
  bool converged;
  bool positive;
} SchroNehariResult;

/**
 * One continuation point.
 */
typedef struct SchroBranchPoint {
  double arclength;
  double kappa;
  double l2_u;
  double l2_v;
  double asymmetry;
  double energy;
  double residual;
  bool positive;
} SchroBranchPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated and
 * truncated to `cap` bytes. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t schro_last_error_message(char *buf, size_t cap);

/**
 * Grid of `nodes` points on [0, radius] in dimension `dim`.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum SchroStatus schro_grid_new(size_t dim, double radius, size_t nodes, struct SchroGrid **out);

/**
 * # Safety
 * `grid` must be null or come from [`schro_grid_new`] and not be freed yet.
 */
void schro_grid_free(struct SchroGrid *grid);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
size_t schro_grid_len(const struct SchroGrid *grid);

/**
 * Solves for the scalar ground state ω on `grid`.
 *
 * # Safety
 * `grid` must be a live grid handle and `out` valid for one pointer write.
 */
enum SchroStatus schro_ground_state_solve(const struct SchroGrid *grid,
                                          double tol,
                                          struct SchroGroundState **out);

/**
 * # Safety
 * `gs` must be null or come from [`schro_ground_state_solve`] and not be freed yet.
 */
void schro_ground_state_free(struct SchroGroundState *gs);

/**
 * ω(0) on the grid, or NaN for a null handle.
 *
 * # Safety
 * `gs` must be null or a live ground-state handle.
 */
double schro_ground_state_center(const struct SchroGroundState *gs);

/**
 * Copies ω at every node into `buf`.
 *
 * # Safety
 * `gs` must be a live handle and `buf` valid for `cap` doubles.
 */
enum SchroStatus schro_ground_state_values(const struct SchroGroundState *gs,
                                           double *buf,
                                           size_t cap);

/**
 * The `count` smallest weighted eigenvalues λ_j(κ), ascending.
 *
 * # Safety
 * `gs` must be a live handle and `buf` valid for `count` doubles.
 */
enum SchroStatus schro_eigenvalues(const struct SchroGroundState *gs,
                                   double kappa,
                                   size_t count,
                                   double *buf);

/**
 * Bifurcation values κ_j(β) for j ≤ `jmax` below `kappa_hi`, written to
 * `kappas` (capacity `jmax`); the number found goes to `found`.
 *
 * # Safety
 * `gs` must be a live handle, `kappas` valid for `jmax` doubles and
 * `found` valid for one write.
 */
enum SchroStatus schro_bifurcation_kappas(const struct SchroGroundState *gs,
                                          double beta,
                                          size_t jmax,
                                          double kappa_hi,
                                          double *kappas,
                                          size_t *found);

/**
 * Existence verdict for positive solutions at (κ, β, μ₁, μ₂).
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SchroStatus schro_classify_region(double kappa,
                                       double beta,
                                       double mu1,
                                       double mu2,
                                       enum SchroVerdict *out);

/**
 * The synchronized pair (u, v) of the T⁺ branch at (κ, β), node values.
 *
 * # Safety
 * `gs` must be a live handle; `u` and `v` valid for `cap` doubles each.
 */
enum SchroStatus schro_synchronized_pair(const struct SchroGroundState *gs,
                                         double kappa,
                                         double beta,
                                         double *u,
                                         double *v,
                                         size_t cap);

/**
 * Nehari ground state started from (ω, ω). `u` and `v` may be null; when
 * given they receive the node values and must hold `cap` doubles.
 *
 * # Safety
 * `gs` must be a live handle, `out` valid for one write, and non-null
 * `u`, `v` valid for `cap` doubles.
 */
enum SchroStatus schro_nehari_ground_state(const struct SchroGroundState *gs,
                                           double kappa,
                                           double beta,
                                           double mu1,
                                           double mu2,
                                           double tol,
                                           size_t max_iter,
                                           struct SchroNehariResult *out,
                                           double *u,
                                           double *v,
                                           size_t cap);

/**
 * Traces the branch bifurcating at κ_j(β) (μ₁ = μ₂ = 1), switching on with
 * amplitude `eps` and stopping once κ leaves [kappa_min, kappa_max].
 *
 * # Safety
 * `gs` must be a live handle and `out` valid for one pointer write.
 */
enum SchroStatus schro_branch_trace(const struct SchroGroundState *gs,
                                    double beta,
                                    size_t j,
                                    double eps,
                                    double step,
                                    size_t max_points,
                                    bool cutoff,
                                    double kappa_min,
                                    double kappa_max,
                                    struct SchroBranch **out);

/**
 * # Safety
 * `branch` must be null or come from [`schro_branch_trace`] and not be freed yet.
 */
void schro_branch_free(struct SchroBranch *branch);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `branch` must be null or a live branch handle.
 */
size_t schro_branch_len(const struct SchroBranch *branch);

/**
 * κ_j at which the branch starts.
 *
 * # Safety
 * `branch` must be null or a live branch handle.
 */
double schro_branch_origin_kappa(const struct SchroBranch *branch);

/**
 * # Safety
 * `branch` must be a live handle and `out` valid for one write.
 */
enum SchroStatus schro_branch_termination(const struct SchroBranch *branch,
                                          enum SchroTermination *out);

/**
 * Point `index` of the branch.
 *
 * # Safety
 * `branch` must be a live handle and `out` valid for one write.
 */
enum SchroStatus schro_branch_point(const struct SchroBranch *branch,
                                    size_t index,
                                    struct SchroBranchPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHRO_H */
