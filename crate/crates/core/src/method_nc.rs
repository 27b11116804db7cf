//! Stabilised nonconforming method: edge-mean DOFs in both components and
//! the jump penalty `J_h(u, v) = (γ/h) Σ_e ∫_e π_e[u]·π_e[v]` on interior
//! edges.

use nalgebra::{DMatrix, DVector};

use crate::assembly::{
    assemble_load, element_systems, scatter_stiffness, solve_system, DofMap, SlotSystem, Solution, SolveOptions,
};
use crate::error::{Result, VemError};
use crate::linsolve::{dense_symmetric_eigen, SparseSystem, TripletBuilder};
use crate::mesh::{PolygonalMesh, Vec2};
use crate::vem::{build_stabilization, ElementSystem, Method};

/// Largest system accepted by [`korn_quotient`].
pub const KORN_MAX_DOFS: usize = 2000;

pub const DEFAULT_GAMMA: f64 = 1.0;

pub fn nc_dof_map(mesh: &PolygonalMesh) -> Result<DofMap> {
    DofMap::new(mesh, Method::Nc)
}

/// Position of global edge `e` in the polygon's local edge list.
fn local_edge(mesh: &PolygonalMesh, k: usize, e: usize) -> usize {
    mesh.polygon_edges(k).iter().position(|&x| x == e).expect("edge not on polygon")
}

/// Moments of the jump `[v] = v⁺ − v⁻` on an interior edge.
///
/// Rows `[m0 of [v]_1, m1 of [v]_1, m0 of [v]_2, m1 of [v]_2]`, columns the
/// local DOFs of `K⁺` followed by those of `K⁻`. `m0` is the mean, `m1`
/// the first moment against `ξ ∈ [-1, 1]` running along the global edge
/// direction, so `∫_e |π_e g|² = |e| (m0² + 3 m1²)`.
#[derive(Debug, Clone)]
pub struct JumpMomentMap {
    pub edge: usize,
    pub plus: usize,
    pub minus: usize,
    pub map: DMatrix<f64>,
}

pub fn jump_moment_map(mesh: &PolygonalMesh, edge: usize, elements: &[ElementSystem]) -> Result<JumpMomentMap> {
    let ed = mesh.edge(edge);
    let (Some(plus), Some(minus)) = (ed.left, ed.right) else {
        return Err(VemError::InvalidInput(format!("edge {edge} is a boundary edge")));
    };
    let np = elements[plus].dofs.n_dof();
    let nm = elements[minus].dofs.n_dof();
    let mut map = DMatrix::zeros(4, np + nm);
    for (k, offset, sign) in [(plus, 0, 1.0), (minus, np, -1.0)] {
        let i = local_edge(mesh, k, edge);
        let orient = mesh.edge_sign(k, i);
        let pr = &elements[k].projector;
        let ne = elements[k].geometry.num_edges();
        for c in 0..2 {
            let row = c * ne + i;
            for j in 0..pr.p.ncols() {
                map[(2 * c, offset + j)] = sign * pr.edge_means[(row, j)];
                map[(2 * c + 1, offset + j)] = sign * orient * pr.trace_slope[(row, j)];
            }
        }
    }
    Ok(JumpMomentMap {
        edge,
        plus,
        minus,
        map,
    })
}

/// Jump penalty in slot space.
pub fn assemble_jump_penalty(
    mesh: &PolygonalMesh,
    map: &DofMap,
    elements: &[ElementSystem],
    gamma: f64,
) -> Result<TripletBuilder> {
    let mut t = TripletBuilder::new(map.n_slots());
    if gamma == 0.0 {
        return Ok(t);
    }
    let scale = gamma / mesh.h();
    for e in mesh.interior_edges() {
        let jm = jump_moment_map(mesh, e, elements)?;
        let len = mesh.edge_length(e);
        let weights = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 1.0, 3.0]));
        let block = jm.map.transpose() * weights * &jm.map * (scale * len);
        let slots: Vec<Option<usize>> = map
            .element_slots(jm.plus)
            .iter()
            .chain(map.element_slots(jm.minus))
            .map(|&s| Some(s))
            .collect();
        t.add_block(&slots, &block);
    }
    Ok(t)
}

/// Stiffness plus jump penalty, in slot space, with zero load.
pub fn assemble_nc_slots(
    mesh: &PolygonalMesh,
    mu: f64,
    lambda: f64,
    gamma: f64,
) -> Result<(DofMap, Vec<ElementSystem>, SlotSystem)> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(VemError::InvalidInput(format!("gamma must be >= 0, got {gamma}")));
    }
    let map = nc_dof_map(mesh)?;
    let elements = element_systems(mesh, Method::Nc, mu, lambda)?;
    let mut t = scatter_stiffness(&map, &elements);
    t.extend(assemble_jump_penalty(mesh, &map, &elements, gamma)?);
    let system = SlotSystem {
        matrix: t.into_csr(),
        load: vec![0.0; map.n_slots()],
    };
    Ok((map, elements, system))
}

/// Eliminated system with homogeneous Dirichlet data and zero right-hand side.
pub fn assemble_nc(mesh: &PolygonalMesh, mu: f64, lambda: f64, gamma: f64) -> Result<SparseSystem> {
    let (map, _, slots) = assemble_nc_slots(mesh, mu, lambda, gamma)?;
    Ok(slots.eliminate(&map, None))
}

/// Load on the free DOFs.
pub fn assemble_load_nc<F>(mesh: &PolygonalMesh, f: F) -> Result<Vec<f64>>
where
    F: Fn(Vec2) -> Vec2 + Sync,
{
    let map = nc_dof_map(mesh)?;
    Ok(map.restrict(&assemble_load(mesh, &map, f)?))
}

pub fn solve_nc<F>(mesh: &PolygonalMesh, mu: f64, lambda: f64, gamma: f64, f: F, opts: SolveOptions) -> Result<Solution>
where
    F: Fn(Vec2) -> Vec2 + Sync,
{
    let (map, _, mut slots) = assemble_nc_slots(mesh, mu, lambda, gamma)?;
    slots.load = assemble_load(mesh, &map, f)?;
    let system = slots.eliminate(&map, None);
    solve_system(map, system, opts)
}

/// Smallest value of `a_h(v, v) / |v|²_h` over the free DOFs, with
/// `μ = 1/2` and `λ = 0`, where `|v|²_h = Σ_K |∇Π v|²_{0,K} + S^K(v, v)` is
/// the computable stand-in for the broken `H¹` seminorm. Dense.
pub fn korn_quotient(mesh: &PolygonalMesh, gamma: f64) -> Result<f64> {
    let (map, elements, slots) = assemble_nc_slots(mesh, 0.5, 0.0, gamma)?;
    if map.n_free() > KORN_MAX_DOFS {
        return Err(VemError::TooLarge {
            size: map.n_free(),
            limit: KORN_MAX_DOFS,
        });
    }
    let a = slots.eliminate(&map, None).matrix.to_dense();
    let mut t = TripletBuilder::new(map.n_slots());
    for (k, el) in elements.iter().enumerate() {
        let b = el.projector.basis;
        let g = DMatrix::from_fn(6, 6, |i, j| {
            let (x, y) = (b.gradient(i), b.gradient(j));
            el.geometry.area * (0..2).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| x[r][c] * y[r][c]).sum::<f64>()
        });
        let p = &el.projector.p;
        let block = p.transpose() * g * p + build_stabilization(&el.projector);
        let s: Vec<Option<usize>> = map.element_slots(k).iter().map(|&s| Some(s)).collect();
        t.add_block(&s, &block);
    }
    let h = SlotSystem {
        matrix: t.into_csr(),
        load: vec![0.0; map.n_slots()],
    }
    .eliminate(&map, None)
    .matrix
    .to_dense();
    let l = h
        .cholesky()
        .ok_or(VemError::SingularMatrix { column: 0, pivot: 0.0 })?
        .l();
    let li = l
        .try_inverse()
        .ok_or(VemError::SingularMatrix { column: 0, pivot: 0.0 })?;
    let s = &li * a * li.transpose();
    Ok(dense_symmetric_eigen(&((&s + s.transpose()) * 0.5))[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::interpolate_slots;
    use crate::geometry::p1_edge_moments;
    use crate::linsolve::{dense_symmetric_eigen, cg_solve};
    use crate::mesh::{generate_hex_mesh, generate_square_mesh, generate_voronoi_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn min_eig(sys: &SparseSystem) -> f64 {
        dense_symmetric_eigen(&sys.matrix.to_dense())[0]
    }

    #[test]
    fn two_by_two_dimension_and_definiteness() {
        let m = generate_square_mesh(2).unwrap();
        let sys = assemble_nc(&m, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(sys.dim(), 8);
        assert!(min_eig(&sys) > 0.0);
    }

    /// Frozen from a dense eigensolve. The penalty raises the smallest
    /// eigenvalue but the unpenalised system stays definite at this size.
    #[test]
    fn penalty_effect_on_two_by_two() {
        let m = generate_square_mesh(2).unwrap();
        let with = min_eig(&assemble_nc(&m, 1.0, 1.0, 1.0).unwrap());
        let without = min_eig(&assemble_nc(&m, 1.0, 1.0, 0.0).unwrap());
        assert!((with - 0.7357022603955188).abs() < 1e-12, "{with}");
        assert!((without - 0.5).abs() < 1e-12, "{without}");
    }

    #[test]
    fn korn_quotient_degenerates_without_penalty() {
        let q: Vec<(f64, f64)> = [2, 4, 8]
            .iter()
            .map(|&n| {
                let m = generate_square_mesh(n).unwrap();
                (korn_quotient(&m, 1.0).unwrap(), korn_quotient(&m, 0.0).unwrap())
            })
            .collect();
        for w in q.windows(2) {
            assert!(w[1].0 > 0.75 * w[0].0, "{q:?}");
            assert!(w[1].1 < 0.3 * w[0].1, "{q:?}");
        }
    }

    #[test]
    fn symmetric_assembly() {
        let m = generate_voronoi_mesh(20, 10, 2).unwrap();
        let d = assemble_nc(&m, 1.0, 10.0, 1.0).unwrap().matrix.to_dense();
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn load_examples() {
        let m = generate_square_mesh(2).unwrap();
        assert!(assemble_load_nc(&m, |_| Vec2::zeros()).unwrap().iter().all(|&v| v == 0.0));
        let b = assemble_load_nc(&m, |_| Vec2::new(1.0, 0.0)).unwrap();
        for r in 0..4 {
            assert!((b[2 * r] - 0.125).abs() < 1e-15);
            assert_eq!(b[2 * r + 1], 0.0);
        }
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let m = generate_hex_mesh(3).unwrap();
        let s = solve_nc(&m, 1.0, 1.0, 1.0, |_| Vec2::zeros(), SolveOptions::default()).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn jump_on_boundary_edge_is_an_error() {
        let m = generate_square_mesh(2).unwrap();
        let els = element_systems(&m, Method::Nc, 1.0, 1.0).unwrap();
        let b = (0..m.edges().len()).find(|&e| m.edge(e).is_boundary()).unwrap();
        assert!(jump_moment_map(&m, b, &els).is_err());
    }

    #[test]
    fn jumps_vanish_for_global_linear_fields() {
        let m = generate_voronoi_mesh(30, 20, 5).unwrap();
        let map = nc_dof_map(&m).unwrap();
        let els = element_systems(&m, Method::Nc, 1.0, 1.0).unwrap();
        let slots = interpolate_slots(&m, &map, |p| Vec2::new(1.0 + 2.0 * p.x - p.y, 0.5 * p.x + 3.0 * p.y)).unwrap();
        for e in m.interior_edges() {
            let jm = jump_moment_map(&m, e, &els).unwrap();
            let mut v = map.gather(jm.plus, &slots).as_slice().to_vec();
            v.extend(map.gather(jm.minus, &slots).iter());
            let j = &jm.map * DVector::from_vec(v);
            assert!(j.amax() < 1e-13);
        }
    }

    /// `J_h(v, v)` against an independent evaluation: each side's projected
    /// field `Π v` is evaluated pointwise along the edge, its moments taken
    /// by quadrature, and `π_e[v]` integrated in squared form.
    #[test]
    fn penalty_matches_brute_force_edge_moments() {
        let m = generate_square_mesh(2).unwrap();
        let map = nc_dof_map(&m).unwrap();
        let els = element_systems(&m, Method::Nc, 1.0, 1.0).unwrap();
        let jump = assemble_jump_penalty(&m, &map, &els, 1.0).unwrap().into_csr();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let free: Vec<f64> = (0..map.n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let slots = map.expand(&free);
        let from_matrix = jump.quadratic_form(&slots);

        let mut brute = 0.0;
        for e in m.interior_edges() {
            let [a, b] = m.edge(e).vertices;
            let seg = crate::geometry::Segment::new(m.vertex(a), m.vertex(b));
            let ed = m.edge(e);
            let field = |k: usize, p: Vec2| {
                let c = els[k].projector.project(&map.gather(k, &slots));
                els[k].projector.basis.evaluate(c.as_slice(), p)
            };
            for comp in 0..2 {
                let plus = p1_edge_moments(&seg, |p| field(ed.left.unwrap(), p)[comp]);
                let minus = p1_edge_moments(&seg, |p| field(ed.right.unwrap(), p)[comp]);
                // mean jump is the DOF difference, which is zero for shared DOFs
                let m1 = plus.1 - minus.1;
                brute += seg.length() * 3.0 * m1 * m1;
            }
        }
        brute /= m.h();
        assert!((from_matrix - brute).abs() < 1e-13 * brute.max(1.0), "{from_matrix} vs {brute}");
        assert!(brute > 0.0);
    }

    #[test]
    fn patch_test_with_lifting() {
        for m in [generate_square_mesh(4).unwrap(), generate_hex_mesh(4).unwrap(), generate_voronoi_mesh(16, 100, 7).unwrap()] {
            let (map, _, slots) = assemble_nc_slots(&m, 1.0, 10.0, 1.0).unwrap();
            for u in [
                (|p: Vec2| Vec2::new(p.x, 0.0)) as fn(Vec2) -> Vec2,
                |p: Vec2| Vec2::new(1.0 + p.x - 2.0 * p.y, 3.0 * p.x + p.y),
            ] {
                let g = interpolate_slots(&m, &map, u).unwrap();
                let sys = slots.eliminate(&map, Some(&g));
                let exact = map.restrict(&g);
                let ax = sys.matrix.apply(&exact);
                let res = ax.iter().zip(&sys.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(res < 1e-10, "residual {res}");
                let sol = cg_solve(&sys, 1e-14, 10 * sys.dim()).unwrap().solution;
                let err = sol.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-10, "error {err}");
            }
        }
    }
}
