use nalgebra::{DMatrix, DVector};

use super::dofs::LocalDofSet;
use crate::error::{Result, VemError};
use crate::geometry::{ElementGeometry, ScaledP1Basis, Tensor2};
use crate::linsolve::DenseLu;

/// Test strains spanning the symmetric 2×2 matrices.
const TEST_STRAINS: [Tensor2; 3] = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]];

/// DOF-to-polynomial maps of one element.
#[derive(Debug, Clone)]
pub struct LocalProjector {
    pub basis: ScaledP1Basis,
    /// `6 × n_dof`: coefficients of `Π v` in the scaled basis.
    pub p: DMatrix<f64>,
    /// `n_dof`: the constant `Π_0 div v`.
    pub d0: DVector<f64>,
    /// `n_dof × 6`: DOFs of the basis fields.
    pub d: DMatrix<f64>,
    /// `2 n_e × n_dof`: edge means of `v`, rows `[v_1 per edge, v_2 per edge]`.
    pub edge_means: DMatrix<f64>,
    /// `2 n_e × n_dof`: edge means of `Π v`, same row layout.
    pub trace_mean: DMatrix<f64>,
    /// `2 n_e × n_dof`: first moments `(1/|e|)∫_e (Π v)_c ξ` with
    /// `ξ ∈ [-1, 1]` running from the start to the end of the local edge.
    pub trace_slope: DMatrix<f64>,
}

impl LocalProjector {
    /// Coefficients of `Π v` for a DOF vector.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.p * v
    }
}

/// Builds `Π` from the defining conditions
/// `∫_K ε(Πv):ε(q) = ∫_∂K v·ε(q)n`, `∫_K rot Πv = ∫_∂K v·t`,
/// `∫_∂K Πv = ∫_∂K v`, all evaluated with edge means only.
pub fn build_projector(geo: &ElementGeometry, dofs: &LocalDofSet) -> Result<LocalProjector> {
    let ne = geo.num_edges();
    let basis = geo.basis();
    let nb = ScaledP1Basis::DIM;
    let mut a = DMatrix::zeros(nb, nb);
    let mut b = DMatrix::zeros(nb, 2 * ne);
    for (r, t) in TEST_STRAINS.iter().enumerate() {
        for j in 0..nb {
            a[(r, j)] = geo.area * crate::geometry::ddot(&basis.strain(j), t);
        }
        for (i, e) in geo.edges.iter().enumerate() {
            let tn = crate::geometry::tensor_apply(t, e.normal);
            b[(r, i)] = e.length * tn.x;
            b[(r, ne + i)] = e.length * tn.y;
        }
    }
    for j in 0..nb {
        a[(3, j)] = geo.area * basis.rot(j);
    }
    for (i, e) in geo.edges.iter().enumerate() {
        b[(3, i)] = e.length * e.tangent.x;
        b[(3, ne + i)] = e.length * e.tangent.y;
    }
    for c in 0..2 {
        for j in 0..nb {
            a[(4 + c, j)] = geo.edges.iter().map(|e| e.length * basis.value(j, e.segment.midpoint())[c]).sum();
        }
        for (i, e) in geo.edges.iter().enumerate() {
            b[(4 + c, c * ne + i)] = e.length;
        }
    }
    let lu = DenseLu::new(&a).map_err(|_| VemError::SingularProjector { element: usize::MAX })?;
    let edge_means = dofs.edge_means_map();
    let p = lu.solve_matrix(&(b * &edge_means));

    let mut div_row = DVector::zeros(2 * ne);
    for (i, e) in geo.edges.iter().enumerate() {
        div_row[i] = e.length * e.normal.x / geo.area;
        div_row[ne + i] = e.length * e.normal.y / geo.area;
    }
    let d0 = edge_means.transpose() * div_row;

    let mut mid = DMatrix::zeros(2 * ne, nb);
    let mut slope = DMatrix::zeros(2 * ne, nb);
    for (i, e) in geo.edges.iter().enumerate() {
        for j in 0..nb {
            let (vm, vs, ve) = (
                basis.value(j, e.segment.midpoint()),
                basis.value(j, e.segment.start),
                basis.value(j, e.segment.end),
            );
            for c in 0..2 {
                mid[(c * ne + i, j)] = vm[c];
                slope[(c * ne + i, j)] = (ve[c] - vs[c]) / 6.0;
            }
        }
    }
    Ok(LocalProjector {
        basis,
        trace_mean: &mid * &p,
        trace_slope: &slope * &p,
        d: dofs.p1_dof_matrix(geo, &basis),
        p,
        d0,
        edge_means,
    })
}
