use nalgebra::{DMatrix, DVector};

use super::dofs::{interpolate_dofs, LocalDofSet};
use super::projector::LocalProjector;
use crate::geometry::{ddot, tensor_apply, ElementGeometry, LinearField, ScaledP1Basis};

#[derive(Debug, Clone)]
pub struct LocalStiffness {
    /// `2μ a^K(Πu, Πv) + S^K(u − Πu, v − Πv)`.
    pub k_mu: DMatrix<f64>,
    /// `λ |K| Π_0 div u Π_0 div v`.
    pub k_lam: DMatrix<f64>,
    pub mu: f64,
    pub lambda: f64,
}

impl LocalStiffness {
    pub fn total(&self) -> DMatrix<f64> {
        &self.k_mu + &self.k_lam
    }
}

/// DOF-identity stabilisation `(I − D P)ᵀ (I − D P)`.
pub fn build_stabilization(projector: &LocalProjector) -> DMatrix<f64> {
    let n = projector.p.ncols();
    let r = DMatrix::identity(n, n) - &projector.d * &projector.p;
    r.transpose() * r
}

pub fn build_local_stiffness(
    geo: &ElementGeometry,
    _dofs: &LocalDofSet,
    projector: &LocalProjector,
    mu: f64,
    lambda: f64,
) -> LocalStiffness {
    let basis = projector.basis;
    let nb = ScaledP1Basis::DIM;
    let g = DMatrix::from_fn(nb, nb, |i, j| geo.area * ddot(&basis.strain(i), &basis.strain(j)));
    let p = &projector.p;
    let mut k_mu = (p.transpose() * g * p) * (2.0 * mu) + build_stabilization(projector);
    let d0 = &projector.d0;
    let mut k_lam = (d0 * d0.transpose()) * (lambda * geo.area);
    symmetrize(&mut k_mu);
    symmetrize(&mut k_lam);
    LocalStiffness { k_mu, k_lam, mu, lambda }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `a^K(q, v) = 2μ ∫_∂K v·ε(q)n + λ div q ∫_∂K v·n`, evaluated from the
/// edge means of `v`.
pub fn exact_local_energy(
    geo: &ElementGeometry,
    projector: &LocalProjector,
    q: &LinearField,
    v: &DVector<f64>,
    mu: f64,
    lambda: f64,
) -> f64 {
    exact_energy_terms(geo, projector, q, v, mu, lambda).iter().sum()
}

fn exact_energy_terms(
    geo: &ElementGeometry,
    projector: &LocalProjector,
    q: &LinearField,
    v: &DVector<f64>,
    mu: f64,
    lambda: f64,
) -> Vec<f64> {
    let ne = geo.num_edges();
    let means = &projector.edge_means * v;
    let (eps, div) = (q.strain(), q.div());
    let mut terms = Vec::with_capacity(2 * ne);
    for (i, e) in geo.edges.iter().enumerate() {
        let vm = crate::mesh::Vec2::new(means[i], means[ne + i]);
        terms.push(2.0 * mu * e.length * vm.dot(&tensor_apply(&eps, e.normal)));
        terms.push(lambda * div * e.length * vm.dot(&e.normal));
    }
    terms
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyResidual {
    /// `|a_h^K(I q, v) − a^K(q, v)|`.
    pub absolute: f64,
    /// Sum of the magnitudes of the boundary terms of `a^K(q, v)`.
    pub scale: f64,
}

impl ConsistencyResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.absolute / self.scale
        } else {
            self.absolute
        }
    }
}

/// Compares the discrete form with the exact one for a linear `q` and an
/// arbitrary DOF vector `v`.
pub fn local_consistency_check(
    geo: &ElementGeometry,
    dofs: &LocalDofSet,
    projector: &LocalProjector,
    stiffness: &LocalStiffness,
    q: &LinearField,
    v: &DVector<f64>,
) -> ConsistencyResidual {
    let qd = interpolate_dofs(geo, dofs, |p| q.value(p));
    let discrete = (stiffness.total() * qd).dot(v);
    let terms = exact_energy_terms(geo, projector, q, v, stiffness.mu, stiffness.lambda);
    let exact: f64 = terms.iter().sum();
    ConsistencyResidual {
        absolute: (discrete - exact).abs(),
        scale: terms.iter().map(|t| t.abs()).sum(),
    }
}
