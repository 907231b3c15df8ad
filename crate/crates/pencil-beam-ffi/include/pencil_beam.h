/* C interface for the pencil-beam finite element solver. */

#ifndef PENCIL_BEAM_H
#define PENCIL_BEAM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Entry-profile family selector for `pb_initial_data_eval`.
 */
typedef enum PbInitialKind {
  PB_INITIAL_KIND_DIRAC = 0,
  PB_INITIAL_KIND_MAXWELLIAN = 1,
  PB_INITIAL_KIND_HYPERBOLIC = 2,
} PbInitialKind;

/**
 * Marching scheme selector; mirrors the solver's scheme enum.
 */
typedef enum PbScheme {
  PB_SCHEME_STANDARD_GALERKIN = 0,
  PB_SCHEME_SEMI_STREAMLINE_DIFFUSION = 1,
  PB_SCHEME_CHARACTERISTIC_STREAMLINE_DIFFUSION = 2,
} PbScheme;

/**
 * Status code returned by every fallible entry point. `pb_last_error`
 * holds a human-readable message for the most recent non-OK return on
 * the calling thread.
 */
typedef enum PbStatus {
  PB_STATUS_OK = 0,
  PB_STATUS_NULL_POINTER = 1,
  PB_STATUS_INVALID_ARGUMENT = 2,
  PB_STATUS_SOLVER_FAILURE = 3,
  PB_STATUS_INVARIANT_VIOLATION = 4,
  PB_STATUS_OUT_OF_DOMAIN = 5,
  PB_STATUS_IO = 6,
  PB_STATUS_PANIC = 7,
} PbStatus;

/**
 * Opaque triangulation handle.
 */
typedef struct PbMesh PbMesh;

/**
 * Slab-marching configuration; field meanings match the solver's native
 * configuration one-to-one.
 */
typedef struct PbMarchConfig {
  enum PbScheme scheme;
  /**
   * Transport cross-section (velocity diffusion coefficient).
   */
  double sigma_tr;
  /**
   * Streamline stabilization weight; ignored by the characteristic
   * scheme.
   */
  double delta;
  /**
   * Slab thickness in the penetration coordinate.
   */
  double step;
  /**
   * Total penetration depth.
   */
  double length;
  /**
   * Relative residual target for the linear solves.
   */
  double solver_tol;
  /**
   * Drop the O(delta*sigma) cross terms from the streamline form.
   */
  bool drop_delta_sigma;
} PbMarchConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `cap` bytes) and returns the full message length excluding the NUL.
 * Call with a null `buf` or zero `cap` to query the required length.
 */
size_t pb_last_error(char *buf, size_t cap);

/**
 * Builds a conforming triangulation of the rectangle
 * `[y_min, y_max] x [eta_min, eta_max]` with at least `target_elements`
 * triangles. On success `*out` owns the new mesh.
 */
enum PbStatus pb_mesh_rectangle(double y_min,
                                double y_max,
                                double eta_min,
                                double eta_max,
                                size_t target_elements,
                                struct PbMesh **out);

/**
 * Red-green refinement of the triangles listed in
 * `marked[0..marked_len]`. The input mesh is left untouched; on success
 * `*out` owns the refined mesh.
 */
enum PbStatus pb_mesh_refine(const struct PbMesh *mesh,
                             const size_t *marked,
                             size_t marked_len,
                             struct PbMesh **out);

void pb_mesh_free(struct PbMesh *mesh);

/**
 * Vertex count, or 0 for a null handle.
 */
size_t pb_mesh_num_vertices(const struct PbMesh *mesh);

/**
 * Triangle count, or 0 for a null handle.
 */
size_t pb_mesh_num_triangles(const struct PbMesh *mesh);

/**
 * Coordinates of vertex `index`.
 */
enum PbStatus pb_mesh_vertex(const struct PbMesh *mesh, size_t index, double *y, double *eta);

/**
 * Marches the nodal entry field through the slab and writes the exit
 * field to `exit_values`. Both arrays must hold exactly
 * `pb_mesh_num_vertices(mesh)` values (`len` is checked).
 */
enum PbStatus pb_march(const struct PbMesh *mesh,
                       const struct PbMarchConfig *config,
                       const double *entry,
                       size_t len,
                       double *exit_values);

/**
 * Closed-form exit profile of the planar beam problem.
 */
double pb_exact_2d(double sigma_tr, double x, double y, double eta);

/**
 * Closed-form transverse dose profile (velocity-integrated 3D beam).
 */
double pb_scalar_flux(double sigma_tr, double x, double y, double z);

/**
 * Evaluates one of the benchmark entry profiles at `(y, eta)`. The
 * smoothing parameter `alpha` must lie in (0, 1).
 */
enum PbStatus pb_initial_data_eval(enum PbInitialKind kind,
                                   double alpha,
                                   double y,
                                   double eta,
                                   double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PENCIL_BEAM_H */
