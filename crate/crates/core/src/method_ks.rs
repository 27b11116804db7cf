//! Kouhia–Stenberg method: nonconforming first component (edge means),
//! conforming second component (vertex values). No jump penalty.

use nalgebra::{DMatrix, DVector};

use crate::assembly::{
    assemble_load, element_systems, scatter_stiffness, solve_system, DofMap, SlotSystem, Solution, SolveOptions,
};
use crate::error::{Result, VemError};
use crate::linsolve::{dense_symmetric_eigenpairs, DenseLu, SparseSystem};
use crate::mesh::{PolygonalMesh, Vec2};
use crate::vem::{ElementSystem, Method};

/// Largest system accepted by [`infsup_estimate`].
pub const INFSUP_MAX_DOFS: usize = 2000;

pub fn ks_dof_map(mesh: &PolygonalMesh) -> Result<DofMap> {
    for k in 0..mesh.num_polygons() {
        if mesh.polygon(k).iter().all(|&v| mesh.is_boundary_vertex(v)) {
            return Err(VemError::InvalidInput(format!(
                "polygon {k} has no interior vertex; the mixed space needs one per element"
            )));
        }
    }
    DofMap::new(mesh, Method::Ks)
}

pub fn assemble_ks_slots(mesh: &PolygonalMesh, mu: f64, lambda: f64) -> Result<(DofMap, Vec<ElementSystem>, SlotSystem)> {
    let map = ks_dof_map(mesh)?;
    let elements = element_systems(mesh, Method::Ks, mu, lambda)?;
    let system = SlotSystem {
        matrix: scatter_stiffness(&map, &elements).into_csr(),
        load: vec![0.0; map.n_slots()],
    };
    Ok((map, elements, system))
}

/// Eliminated system with homogeneous Dirichlet data and zero right-hand side.
pub fn assemble_ks(mesh: &PolygonalMesh, mu: f64, lambda: f64) -> Result<SparseSystem> {
    let (map, _, slots) = assemble_ks_slots(mesh, mu, lambda)?;
    Ok(slots.eliminate(&map, None))
}

pub fn assemble_load_ks<F>(mesh: &PolygonalMesh, f: F) -> Result<Vec<f64>>
where
    F: Fn(Vec2) -> Vec2 + Sync,
{
    let map = ks_dof_map(mesh)?;
    Ok(map.restrict(&assemble_load(mesh, &map, f)?))
}

pub fn solve_ks<F>(mesh: &PolygonalMesh, mu: f64, lambda: f64, f: F, opts: SolveOptions) -> Result<Solution>
where
    F: Fn(Vec2) -> Vec2 + Sync,
{
    let (map, _, mut slots) = assemble_ks_slots(mesh, mu, lambda)?;
    slots.load = assemble_load(mesh, &map, f)?;
    let system = slots.eliminate(&map, None);
    solve_system(map, system, opts)
}

/// Empirical inf-sup constant of the KS velocity space against piecewise
/// constant pressures with zero mean.
///
/// `β_h² ` is the smallest eigenvalue of `N^{-1/2} B M^{-1} Bᵀ N^{-1/2}` on
/// the complement of the constant pressure, where `B` holds `|K| Π_0 div`,
/// `M` is the stabilised `μ = 1/2` stiffness and `N = diag |K|`.
pub fn infsup_estimate(mesh: &PolygonalMesh) -> Result<f64> {
    let (map, elements, slots) = assemble_ks_slots(mesh, 0.5, 0.0)?;
    let n = map.n_free();
    if n > INFSUP_MAX_DOFS {
        return Err(VemError::TooLarge {
            size: n,
            limit: INFSUP_MAX_DOFS,
        });
    }
    let m = slots.eliminate(&map, None).matrix.to_dense();
    let np = mesh.num_polygons();
    let mut b = DMatrix::zeros(np, n);
    for (k, el) in elements.iter().enumerate() {
        for (i, f) in map.element_free(k).into_iter().enumerate() {
            if let Some(f) = f {
                b[(k, f)] += el.geometry.area * el.projector.d0[i];
            }
        }
    }
    let area_sqrt = DVector::from_iterator(np, elements.iter().map(|e| e.geometry.area.sqrt()));
    let lu = DenseLu::new(&m)?;
    let minv_bt = lu.solve_matrix(&b.transpose());
    let mut s = &b * minv_bt;
    for i in 0..np {
        for j in 0..np {
            s[(i, j)] /= area_sqrt[i] * area_sqrt[j];
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    // The constant pressure is orthogonal to the discrete divergence; in the
    // scaled variables it is the direction of sqrt|K|.
    let w = &area_sqrt / area_sqrt.norm();
    let (values, vectors) = dense_symmetric_eigenpairs(&s);
    let constant = (0..np)
        .max_by(|&a, &b| {
            vectors.column(a).dot(&w).abs().total_cmp(&vectors.column(b).dot(&w).abs())
        })
        .expect("at least one polygon");
    let beta_sq = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != constant)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    Ok(beta_sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::interpolate_slots;
    use crate::linsolve::{cg_solve, dense_symmetric_eigen};
    use crate::mesh::{generate_hex_mesh, generate_square_mesh, generate_voronoi_mesh};

    #[test]
    fn two_by_two_dimension_and_definiteness() {
        let m = generate_square_mesh(2).unwrap();
        let sys = assemble_ks(&m, 1.0, 1.0).unwrap();
        assert_eq!(sys.dim(), 5);
        assert!(dense_symmetric_eigen(&sys.matrix.to_dense())[0] > 0.0);
    }

    #[test]
    fn single_square_rejected() {
        let m = generate_square_mesh(1).unwrap();
        assert!(matches!(assemble_ks(&m, 1.0, 1.0), Err(VemError::InvalidInput(_))));
    }

    #[test]
    fn load_examples() {
        let m = generate_square_mesh(2).unwrap();
        assert!(assemble_load_ks(&m, |_| Vec2::zeros()).unwrap().iter().all(|&v| v == 0.0));
        let b = assemble_load_ks(&m, |_| Vec2::new(0.0, 1.0)).unwrap();
        assert!((b[4] - 0.25).abs() < 1e-15);
        assert!(b[..4].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_component_is_continuous() {
        let m = generate_voronoi_mesh(25, 30, 3).unwrap();
        let (map, els, _) = assemble_ks_slots(&m, 1.0, 1.0).unwrap();
        let free: Vec<f64> = (0..map.n_free()).map(|i| (i as f64 * 1.3).sin()).collect();
        let slots = map.expand(&free);
        let ne_of = |k: usize| els[k].geometry.num_edges();
        for e in m.interior_edges() {
            let ed = m.edge(e);
            let mean = |k: usize| {
                let i = m.polygon_edges(k).iter().position(|&x| x == e).unwrap();
                (&els[k].projector.edge_means * map.gather(k, &slots))[ne_of(k) + i]
            };
            assert_eq!(mean(ed.left.unwrap()), mean(ed.right.unwrap()));
        }
    }

    #[test]
    fn patch_test_with_lifting() {
        for m in [generate_square_mesh(4).unwrap(), generate_hex_mesh(4).unwrap(), generate_voronoi_mesh(16, 100, 7).unwrap()] {
            let (map, _, slots) = assemble_ks_slots(&m, 1.0, 1e4).unwrap();
            for u in [
                (|p: Vec2| Vec2::new(p.x, p.y)) as fn(Vec2) -> Vec2,
                |p: Vec2| Vec2::new(-p.y, p.x),
            ] {
                let g = interpolate_slots(&m, &map, u).unwrap();
                let sys = slots.eliminate(&map, Some(&g));
                let exact = map.restrict(&g);
                let sol = cg_solve(&sys, 1e-15, 20 * sys.dim()).unwrap().solution;
                let err = sol.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-10, "error {err}");
            }
        }
    }

    #[test]
    fn infsup_positive() {
        for m in [generate_square_mesh(2).unwrap(), generate_square_mesh(4).unwrap(), generate_hex_mesh(2).unwrap()] {
            let b = infsup_estimate(&m).unwrap();
            assert!(b > 1e-3, "beta = {b}");
        }
    }

    #[test]
    fn infsup_rejects_large_meshes() {
        let m = generate_square_mesh(40).unwrap();
        assert!(matches!(infsup_estimate(&m), Err(VemError::TooLarge { .. })));
    }
}
