#ifndef VEM_ELASTICITY_H
#define VEM_ELASTICITY_H

/* Generated by cbindgen from the vem-elasticity-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VemMethod {
  VEM_METHOD_NONCONFORMING = 0,
  VEM_METHOD_KOUHIA_STENBERG = 1,
} VemMethod;

typedef enum VemSolver {
  VEM_SOLVER_CG = 0,
  VEM_SOLVER_DIRECT = 1,
  VEM_SOLVER_AUTO = 2,
} VemSolver;

typedef enum VemStatus {
  VEM_STATUS_OK = 0,
  VEM_STATUS_NULL_POINTER = 1,
  VEM_STATUS_INVALID_ARGUMENT = 2,
  VEM_STATUS_MESH_ERROR = 3,
  /**
   * Singular, indefinite or non-convergent linear algebra.
   */
  VEM_STATUS_SOLVER_ERROR = 4,
  VEM_STATUS_IO_ERROR = 5,
  VEM_STATUS_BUFFER_TOO_SMALL = 6,
  VEM_STATUS_PANIC = 7,
} VemStatus;

typedef enum VemFamily {
  VEM_FAMILY_SQUARE = 0,
  VEM_FAMILY_HEX = 1,
  VEM_FAMILY_VORONOI = 2,
} VemFamily;

/**
 * Opaque mesh handle.
 */
typedef struct VemMesh VemMesh;

/**
 * Opaque solution handle.
 */
typedef struct VemSolution VemSolution;

typedef struct VemSolveParams {
  enum VemMethod method;
  double mu;
  double lambda;
  /**
   * Jump penalty of the nonconforming method.
   */
  double gamma;
  /**
   * Relative residual for CG.
   */
  double tol;
  enum VemSolver solver;
} VemSolveParams;

typedef struct VemErrors {
  /**
   * Discrete energy error.
   */
  double energy;
  /**
   * Weighted DOF error.
   */
  double l2;
} VemErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *vem_last_error_message(void);

struct VemSolveParams vem_solve_params_default(void);

/**
 * Generates level `n` of a mesh family. `seed` only affects Voronoi meshes.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum VemStatus vem_mesh_generate(enum VemFamily family,
                                 size_t n,
                                 uint64_t seed,
                                 struct VemMesh **out);

/**
 * Reads a mesh in the text mesh format.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum VemStatus vem_mesh_load(const char *path, struct VemMesh **out);

/**
 * # Safety
 * `mesh` must be a live handle and `path` a nul-terminated string.
 */
enum VemStatus vem_mesh_save(const struct VemMesh *mesh, const char *path);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t vem_mesh_num_polygons(const struct VemMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t vem_mesh_num_vertices(const struct VemMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t vem_mesh_num_edges(const struct VemMesh *mesh);

/**
 * Largest element diameter, or NaN for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
double vem_mesh_h(const struct VemMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a handle not freed before.
 */
void vem_mesh_free(struct VemMesh *mesh);

/**
 * Solves the manufactured problem on `mesh` and measures its errors.
 *
 * # Safety
 * `mesh` must be a live handle, `params` readable and `out` writable.
 */
enum VemStatus vem_solve_manufactured(const struct VemMesh *mesh,
                                      const struct VemSolveParams *params,
                                      struct VemSolution **out);

/**
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum VemStatus vem_solution_errors(const struct VemSolution *solution, struct VemErrors *out);

/**
 * Number of free DOFs.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t vem_solution_num_dofs(const struct VemSolution *solution);

/**
 * CG iterations, 0 when the direct solver was used.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t vem_solution_iterations(const struct VemSolution *solution);

/**
 * Copies the free DOF values into `buf`, which must hold at least
 * `vem_solution_num_dofs` entries.
 *
 * # Safety
 * `solution` must be a live handle and `buf` writable for `len` doubles.
 */
enum VemStatus vem_solution_copy_values(const struct VemSolution *solution,
                                        double *buf,
                                        size_t len);

/**
 * # Safety
 * `solution` must be null or a handle not freed before.
 */
void vem_solution_free(struct VemSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VEM_ELASTICITY_H */
