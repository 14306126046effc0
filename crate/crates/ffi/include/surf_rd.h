#ifndef SURF_RD_H
#define SURF_RD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Mass matrix used by a run.
 */
typedef enum SrdMethod {
  /**
   * Consistent mass.
   */
  SRD_METHOD_SFEM = 0,
  /**
   * Lumped mass.
   */
  SRD_METHOD_LSFEM = 1,
} SrdMethod;

/**
 * Result codes. Zero is success.
 */
typedef enum SrdStatus {
  SRD_STATUS_OK = 0,
  SRD_STATUS_NULL_POINTER = 1,
  SRD_STATUS_INVALID_ARGUMENT = 2,
  SRD_STATUS_MESH_ERROR = 3,
  SRD_STATUS_SOLVER_ERROR = 4,
  SRD_STATUS_BUFFER_TOO_SMALL = 5,
  SRD_STATUS_INTERNAL = 6,
} SrdStatus;

/**
 * Triangulated closed surface.
 */
typedef struct SrdMesh SrdMesh;

/**
 * Stiffness, lumped mass and consistent mass of a mesh.
 */
typedef struct SrdOperators SrdOperators;

/**
 * Finished simulation.
 */
typedef struct SrdRun SrdRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *srd_last_error(void);

/**
 * Icosphere with `level` subdivisions on the unit sphere.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SrdStatus srd_mesh_icosphere(uint32_t level, struct SrdMesh **out);

/**
 * Delaunay triangulation of `n_points` Fibonacci points on the unit sphere.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SrdStatus srd_mesh_fibonacci(size_t n_points, struct SrdMesh **out);

/**
 * Reads and validates an OFF file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer to
 * writable storage for one handle.
 */
enum SrdStatus srd_mesh_read_off(const char *path, struct SrdMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from an `srd_mesh_*` constructor that has
 * not been freed.
 */
void srd_mesh_free(struct SrdMesh *mesh);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live mesh handle.
 */
size_t srd_mesh_n_vertices(const struct SrdMesh *mesh);

/**
 * Number of triangles, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live mesh handle.
 */
size_t srd_mesh_n_triangles(const struct SrdMesh *mesh);

/**
 * Longest edge length, or NaN for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live mesh handle.
 */
double srd_mesh_size(const struct SrdMesh *mesh);

/**
 * Copies vertex coordinates as `x0 y0 z0 x1 ...` into `xyz`, which holds
 * `len` doubles and needs at least `3 * n_vertices`.
 *
 * # Safety
 * `mesh` must be a live mesh handle and `xyz` must point to `len` writable
 * doubles.
 */
enum SrdStatus srd_mesh_vertices(const struct SrdMesh *mesh, double *xyz, size_t len);

/**
 * Assembles the finite element matrices of `mesh`.
 *
 * # Safety
 * `mesh` must be a live mesh handle and `out` a valid pointer to writable
 * storage for one handle.
 */
enum SrdStatus srd_operators_assemble(const struct SrdMesh *mesh, struct SrdOperators **out);

/**
 * # Safety
 * `ops` must be null or a live operators handle.
 */
void srd_operators_free(struct SrdOperators *ops);

/**
 * Sum of the lumped mass, i.e. the surface area.
 *
 * # Safety
 * `ops` must be null or a live operators handle.
 */
double srd_operators_total_area(const struct SrdOperators *ops);

/**
 * `x^T A x / x^T M x` for nodal values `x` of length `n`.
 *
 * # Safety
 * `ops` must be a live operators handle, `x` must point to `n` doubles and
 * `out` to one writable double.
 */
enum SrdStatus srd_operators_rayleigh_quotient(const struct SrdOperators *ops,
                                               const double *x,
                                               size_t n,
                                               double *out);

/**
 * Largest reaction time step keeping the invariant rectangle of experiment
 * `experiment` (1 to 4). Infinite when the reaction imposes no limit.
 *
 * # Safety
 * `out` must point to one writable double.
 */
enum SrdStatus srd_max_stable_timestep(uint32_t experiment, double *out);

/**
 * Runs experiment `experiment` (1 to 4) on `mesh` with `method` one of the
 * [`SrdMethod`] values. Non-positive `tau` or
 * `t_final` select the experiment defaults. A blow-up is a successful run
 * whose status reports it; see [`srd_run_blew_up`].
 *
 * # Safety
 * `mesh` must be a live mesh handle and `out` a valid pointer to writable
 * storage for one handle.
 */
enum SrdStatus srd_run_experiment(const struct SrdMesh *mesh,
                                  uint32_t experiment,
                                  uint32_t method,
                                  double tau,
                                  double t_final,
                                  struct SrdRun **out);

/**
 * # Safety
 * `run` must be null or a live run handle.
 */
void srd_run_free(struct SrdRun *run);

/**
 * True when the run stopped on a non-finite or huge value.
 *
 * # Safety
 * `run` must be null or a live run handle.
 */
bool srd_run_blew_up(const struct SrdRun *run);

/**
 * Time step actually used.
 *
 * # Safety
 * `run` must be null or a live run handle.
 */
double srd_run_tau(const struct SrdRun *run);

/**
 * Number of completed steps.
 *
 * # Safety
 * `run` must be null or a live run handle.
 */
size_t srd_run_n_steps(const struct SrdRun *run);

/**
 * Number of solution components.
 *
 * # Safety
 * `run` must be null or a live run handle.
 */
size_t srd_run_n_components(const struct SrdRun *run);

/**
 * Maximum over steps of the L2 error against the exact solution. Fails with
 * `InvalidArgument` for experiments without one.
 *
 * # Safety
 * `run` must be a live run handle and `out` must point to one writable
 * double.
 */
enum SrdStatus srd_run_error(const struct SrdRun *run, double *out);

/**
 * Minimum and maximum of component `k` over steps `1..=n`. After a blow-up
 * these are the last finite extrema.
 *
 * # Safety
 * `run` must be a live run handle; `min` and `max` must each point to one
 * writable double.
 */
enum SrdStatus srd_run_extrema(const struct SrdRun *run, size_t k, double *min, double *max);

/**
 * Copies component `k` of the final state (one value per vertex) into
 * `values`, which holds `len` doubles.
 *
 * # Safety
 * `run` must be a live run handle and `values` must point to `len`
 * writable doubles.
 */
enum SrdStatus srd_run_final_state(const struct SrdRun *run, size_t k, double *values, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURF_RD_H */
