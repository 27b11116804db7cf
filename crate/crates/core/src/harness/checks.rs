//! Measurements behind the diagnostic suite. Each returns the raw quantity;
//! thresholds are applied by the caller.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{interpolate_slots, DofMap, SlotSystem};
use crate::error::Result;
use crate::geometry::{ElementGeometry, LinearField};
use crate::linsolve::{dense_symmetric_eigen, DenseLu};
use crate::mesh::{PolygonalMesh, Vec2};
use crate::method_ks::{assemble_ks, assemble_ks_slots};
use crate::method_nc::{assemble_nc, assemble_nc_slots};
use crate::vem::{interpolate_dofs, local_consistency_check, ElementSystem, LocalDofSet, Method};

/// Smallest eigenvalue of the eliminated system (dense).
pub fn min_eigenvalue(mesh: &PolygonalMesh, method: Method, mu: f64, lambda: f64, gamma: f64) -> Result<f64> {
    let sys = match method {
        Method::Nc => assemble_nc(mesh, mu, lambda, gamma)?,
        Method::Ks => assemble_ks(mesh, mu, lambda)?,
    };
    Ok(dense_symmetric_eigen(&sys.matrix.to_dense())[0])
}

fn slot_system(
    mesh: &PolygonalMesh,
    method: Method,
    mu: f64,
    lambda: f64,
    gamma: f64,
) -> Result<(DofMap, Vec<ElementSystem>, SlotSystem)> {
    match method {
        Method::Nc => assemble_nc_slots(mesh, mu, lambda, gamma),
        Method::Ks => assemble_ks_slots(mesh, mu, lambda),
    }
}

/// Max DOF error of the discrete solution with zero load and boundary data
/// taken from the linear field `q` (dense solve).
pub fn patch_test_error(
    mesh: &PolygonalMesh,
    method: Method,
    q: &LinearField,
    mu: f64,
    lambda: f64,
    gamma: f64,
) -> Result<f64> {
    let (map, _, slots) = slot_system(mesh, method, mu, lambda, gamma)?;
    let g = interpolate_slots(mesh, &map, |p| q.value(p))?;
    let sys = slots.eliminate(&map, Some(&g));
    let lu = DenseLu::new(&sys.matrix.to_dense())?;
    let x = lu.solve(&DVector::from_vec(sys.rhs.clone()));
    let exact = map.restrict(&g);
    Ok(x.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// The fields used by the patch tests: translations, a rotation, a
/// dilation, a shear and a general affine field.
pub fn patch_fields() -> Vec<(&'static str, LinearField)> {
    vec![
        ("(1,0)", LinearField::monomial(0)),
        ("(0,1)", LinearField::monomial(3)),
        ("(x,0)", LinearField::monomial(1)),
        ("(-y,x)", LinearField::rotation()),
        ("(x,y)", LinearField::new([0.0, 1.0, 0.0], [0.0, 0.0, 1.0])),
        ("(y,0)", LinearField::monomial(2)),
        ("affine", LinearField::new([0.3, 1.0, -2.0], [-0.7, 0.5, 1.5])),
    ]
}

fn random_admissible(map: &DofMap, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let free: Vec<f64> = (0..map.n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
    map.expand(&free)
}

/// Edge means of both components on local edge `i`, read from the DOFs
/// without the projector: NC means are DOFs, KS component 2 averages the
/// endpoint values.
fn raw_edge_means(method: Method, local: &DVector<f64>, ne: usize, i: usize) -> Vec2 {
    match method {
        Method::Nc => Vec2::new(local[i], local[ne + i]),
        Method::Ks => Vec2::new(local[i], 0.5 * (local[ne + i] + local[ne + (i + 1) % ne])),
    }
}

/// Structural identities on random admissible DOF vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralReport {
    /// Max over edges of `|(1/|e|)∫_e [v]|`, boundary edges against zero.
    pub mean_jump: f64,
    /// Max over samples of `|Σ_K ∫_∂K v·t_K|`.
    pub global_rot: f64,
    /// Max over elements of `|d0·v − (1/|K|) Σ_e |e| mean_e(v)·n_K|`,
    /// relative to `max(1, |reference|)`.
    pub divergence: f64,
}

pub fn structural_identities(mesh: &PolygonalMesh, method: Method, samples: usize, seed: u64) -> Result<StructuralReport> {
    let (map, elements, _) = slot_system(mesh, method, 1.0, 1.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = StructuralReport {
        mean_jump: 0.0,
        global_rot: 0.0,
        divergence: 0.0,
    };
    for _ in 0..samples {
        let slots = random_admissible(&map, &mut rng);
        let locals: Vec<DVector<f64>> = (0..mesh.num_polygons()).map(|k| map.gather(k, &slots)).collect();
        // edge means seen from each side, via the projector tables
        for (e, ed) in mesh.edges().iter().enumerate() {
            let side = |k: usize| {
                let i = mesh.polygon_edges(k).iter().position(|&x| x == e).expect("edge on polygon");
                let ne = elements[k].geometry.num_edges();
                let m = &elements[k].projector.edge_means * &locals[k];
                Vec2::new(m[i], m[ne + i])
            };
            let jump = match (ed.left, ed.right) {
                (Some(a), Some(b)) => side(a) - side(b),
                _ => side(ed.any_polygon()),
            };
            rep.mean_jump = rep.mean_jump.max(jump.amax());
        }
        let mut rot = 0.0;
        for (k, el) in elements.iter().enumerate() {
            let geo: &ElementGeometry = &el.geometry;
            let ne = geo.num_edges();
            let mut flux = 0.0;
            for (i, edge) in geo.edges.iter().enumerate() {
                let m = raw_edge_means(method, &locals[k], ne, i);
                rot += edge.length * m.dot(&edge.tangent);
                flux += edge.length * m.dot(&edge.normal);
            }
            let reference = flux / geo.area;
            let d0 = el.projector.d0.dot(&locals[k]);
            rep.divergence = rep.divergence.max((d0 - reference).abs() / reference.abs().max(1.0));
        }
        rep.global_rot = rep.global_rot.max(rot.abs());
    }
    Ok(rep)
}

/// Projector and consistency measurements over all elements of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorReport {
    /// Max coefficient error of `Π` applied to DOFs of the six basis fields,
    /// relative to `max(1, |coefficient|)`.
    pub reproduction: f64,
    /// Max relative consistency residual over the random pairs.
    pub consistency: f64,
    pub min_kernel_dim: usize,
    pub max_kernel_dim: usize,
}

/// `pairs` random `(q, v)` consistency checks spread over the elements.
pub fn projector_suite(mesh: &PolygonalMesh, method: Method, pairs: usize, seed: u64) -> Result<ProjectorReport> {
    let elements = crate::assembly::element_systems(mesh, method, 1.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ProjectorReport {
        reproduction: 0.0,
        consistency: 0.0,
        min_kernel_dim: usize::MAX,
        max_kernel_dim: 0,
    };
    for el in &elements {
        for j in 0..6 {
            let q = LinearField::monomial(j);
            let v = interpolate_dofs(&el.geometry, &el.dofs, |p| q.value(p));
            let c = el.projector.project(&v);
            let exact = el.projector.basis.coefficients(&q);
            for (a, b) in c.iter().zip(exact) {
                rep.reproduction = rep.reproduction.max((a - b).abs() / b.abs().max(1.0));
            }
        }
        let ev = dense_symmetric_eigen(&el.stiffness.k_mu);
        let top = ev.last().copied().unwrap_or(0.0);
        let kernel = ev.iter().filter(|&&l| l.abs() <= 1e-10 * top).count();
        rep.min_kernel_dim = rep.min_kernel_dim.min(kernel);
        rep.max_kernel_dim = rep.max_kernel_dim.max(kernel);
    }
    for t in 0..pairs {
        let el = &elements[t % elements.len()];
        let mut c = [[0.0; 3]; 2];
        c.iter_mut().flatten().for_each(|x| *x = rng.random_range(-1.0..1.0));
        let q = LinearField::new(c[0], c[1]);
        let v = DVector::from_fn(el.dofs.n_dof(), |_, _| rng.random_range(-1.0..1.0));
        let dofs: LocalDofSet = el.dofs;
        let r = local_consistency_check(&el.geometry, &dofs, &el.projector, &el.stiffness, &q, &v);
        rep.consistency = rep.consistency.max(r.relative());
    }
    Ok(rep)
}

/// Random sample points in the unit square.
pub fn sample_points(count: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Vec2::new(rng.random(), rng.random())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_hex_mesh, generate_square_mesh};

    #[test]
    fn patch_tests_on_hex() {
        let m = generate_hex_mesh(3).unwrap();
        for method in [Method::Nc, Method::Ks] {
            for (name, q) in patch_fields() {
                let e = patch_test_error(&m, method, &q, 1.0, 100.0, 1.0).unwrap();
                assert!(e < 1e-11, "{method} {name}: {e:e}");
            }
        }
    }

    #[test]
    fn structural_on_squares() {
        let m = generate_square_mesh(3).unwrap();
        for method in [Method::Nc, Method::Ks] {
            let r = structural_identities(&m, method, 5, 1).unwrap();
            assert!(r.mean_jump < 1e-13 && r.global_rot < 1e-13 && r.divergence < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn projector_suite_on_hex() {
        let m = generate_hex_mesh(2).unwrap();
        let r = projector_suite(&m, Method::Nc, 30, 3).unwrap();
        assert_eq!((r.min_kernel_dim, r.max_kernel_dim), (3, 3));
        assert!(r.reproduction < 1e-12 && r.consistency < 1e-12, "{r:?}");
    }
}
