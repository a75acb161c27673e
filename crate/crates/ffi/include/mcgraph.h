#ifndef MCGRAPH_H
#define MCGRAPH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Zero is success.
typedef enum McgStatus {
  MCG_STATUS_OK = 0,
  MCG_STATUS_NULL_POINTER = 1,
  MCG_STATUS_INVALID_ARGUMENT = 2,
  MCG_STATUS_GEOMETRY = 3,
  MCG_STATUS_EXPRESSION = 4,
  MCG_STATUS_CONFIG = 5,
  // The solve ran but did not converge; the solution handle is still
  // returned and its verdict says why.
  MCG_STATUS_NOT_CONVERGED = 6,
  MCG_STATUS_BUFFER_TOO_SMALL = 7,
  MCG_STATUS_IO = 8,
  MCG_STATUS_PANIC = 9,
} McgStatus;

// Solver verdicts.
typedef enum McgVerdict {
  MCG_VERDICT_CONVERGED = 0,
  MCG_VERDICT_DIVERGED_GRADIENT = 1,
  MCG_VERDICT_STAGNATED = 2,
  MCG_VERDICT_LINEAR_FAILURE = 3,
} McgVerdict;

// Opaque planar domain.
typedef struct McgDomain McgDomain;

// Opaque converged (or last) iterate of a solve.
typedef struct McgSolution McgSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *mcg_last_error(void);

// Library version as a static NUL-terminated string.
const char *mcg_version(void);

enum McgStatus mcg_domain_disk(double cx, double cy, double radius, struct McgDomain **out);

enum McgStatus mcg_domain_ellipse(double cx, double cy, double a, double b, struct McgDomain **out);

enum McgStatus mcg_domain_rounded_rect(double cx,
                                       double cy,
                                       double half_width,
                                       double half_height,
                                       double corner_radius,
                                       struct McgDomain **out);

// Cassini oval with a concave neck; needs 0 < c < b < √2·c.
enum McgStatus mcg_domain_dumbbell(double c, double b, struct McgDomain **out);

// The component of {f < 0} containing the seed, inside a box of half
// side `extent` around it.
//
// # Safety
// `expression` must be a NUL-terminated string.
enum McgStatus mcg_domain_level_set(const char *expression,
                                    double seed_x,
                                    double seed_y,
                                    double extent,
                                    struct McgDomain **out);

// # Safety
// `domain` must come from an `mcg_domain_*` constructor and not be freed
// twice. Null is ignored.
void mcg_domain_free(struct McgDomain *domain);

// Serrin margin min over ∂Ω of (n−1)κ − n|H| for constant H; `satisfied`
// is set to 1 or 0. Either output may be null.
//
// # Safety
// `domain` must be a live handle.
enum McgStatus mcg_check_serrin(const struct McgDomain *domain,
                                double curvature,
                                uint32_t n,
                                double *margin,
                                int32_t *satisfied);

// A priori bound on sup|u| given sup|u| over ∂Ω.
//
// # Safety
// `domain` must be a live handle and `bound` writable.
enum McgStatus mcg_height_bound(const struct McgDomain *domain,
                                double curvature,
                                uint32_t n,
                                double boundary_sup,
                                double *bound);

// Solves for constant H with Dirichlet data given as an expression in x
// and y (null means zero data) on a grid of spacing `h`, using the default
// solver settings. On `Ok` or `NotConverged`, `*out` holds a solution
// handle; on any other status it is null.
//
// # Safety
// `domain` must be a live handle, `data` null or NUL-terminated, `out`
// writable.
enum McgStatus mcg_solve(const struct McgDomain *domain,
                         double curvature,
                         const char *data,
                         double h,
                         struct McgSolution **out);

// # Safety
// `solution` must be a live handle.
enum McgVerdict mcg_solution_verdict(const struct McgSolution *solution);

// Total Picard iterations over all continuation stages; 0 for null.
//
// # Safety
// `solution` must be a live handle or null.
size_t mcg_solution_iterations(const struct McgSolution *solution);

// Number of interior grid nodes; 0 for null.
//
// # Safety
// `solution` must be a live handle or null.
size_t mcg_solution_node_count(const struct McgSolution *solution);

// Copies node coordinates and values into caller buffers of length `len`
// (any of them may be null to skip). Returns `BufferTooSmall` when `len`
// is below the node count.
//
// # Safety
// Non-null buffers must hold `len` doubles.
enum McgStatus mcg_solution_nodes(const struct McgSolution *solution,
                                  double *xs,
                                  double *ys,
                                  double *values,
                                  size_t len);

// sup|u| over interior nodes; NaN for null.
//
// # Safety
// `solution` must be a live handle or null.
double mcg_solution_sup(const struct McgSolution *solution);

// # Safety
// `solution` must come from `mcg_solve` and not be freed twice. Null is
// ignored.
void mcg_solution_free(struct McgSolution *solution);

// Runs a scenario given as config text and writes its artifacts to
// `out_dir`, as the `run` command does. `exit_code` receives the command's
// exit code (0 ok, 2 solver failure, 3 audit failure).
//
// # Safety
// `config` and `out_dir` must be NUL-terminated; `exit_code` writable or
// null.
enum McgStatus mcg_run_config(const char *config, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCGRAPH_H */
