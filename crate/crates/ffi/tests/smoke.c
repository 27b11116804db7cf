#include <stdio.h>
#include "vem_elasticity.h"

int main(void) {
    VemMesh *mesh = NULL;
    if (vem_mesh_generate(VEM_FAMILY_HEX, 3, 1, &mesh) != VEM_STATUS_OK) {
        fprintf(stderr, "%s\n", vem_last_error_message());
        return 1;
    }
    VemSolveParams p = vem_solve_params_default();
    p.method = VEM_METHOD_KOUHIA_STENBERG;
    VemSolution *sol = NULL;
    if (vem_solve_manufactured(mesh, &p, &sol) != VEM_STATUS_OK) {
        fprintf(stderr, "%s\n", vem_last_error_message());
        return 1;
    }
    VemErrors e;
    vem_solution_errors(sol, &e);
    printf("%zu %zu %.6e %.6e\n", vem_mesh_num_polygons(mesh), vem_solution_num_dofs(sol), e.energy, e.l2);
    vem_solution_free(sol);
    vem_mesh_free(mesh);
    return VEM_STATUS_NULL_POINTER == vem_mesh_generate(VEM_FAMILY_SQUARE, 2, 0, NULL) ? 0 : 1;
}
