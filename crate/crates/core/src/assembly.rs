//! Global DOF numbering, scatter of element matrices, loads and Dirichlet
//! elimination, shared by both methods.
//!
//! Assembly happens in a "slot" space holding every DOF including the
//! boundary ones; elimination then keeps the free slots only.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};
use crate::geometry::{polygon_integrate_vec, ElementGeometry};
use crate::linsolve::{cg_solve, EnvelopeCholesky, SparseSystem, SymmetricCsr, TripletBuilder};
use crate::mesh::{PolygonalMesh, Vec2};
use crate::vem::{interpolate_dofs, ElementSystem, LocalDof, Method};

/// Quadrature degree of the element averages of the load.
pub const LOAD_QUADRATURE_DEGREE: usize = 7;

/// Mapping between local DOFs, slots and free unknowns.
///
/// NC slots: `2e + c` for edge `e`, component `c`; free index `2r + c` for
/// the `r`-th interior edge.
/// KS slots: `e` for the component-1 mean on edge `e`, `n_edges + v` for the
/// component-2 value at vertex `v`; free indices list interior edges first,
/// then interior vertices.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub method: Method,
    slot_free: Vec<Option<usize>>,
    free_slot: Vec<usize>,
    element_slots: Vec<Vec<usize>>,
}

impl DofMap {
    pub fn new(mesh: &PolygonalMesh, method: Method) -> Result<Self> {
        let ne = mesh.edges().len();
        let n_slots = match method {
            Method::Nc => 2 * ne,
            Method::Ks => ne + mesh.num_vertices(),
        };
        let mut slot_free = vec![None; n_slots];
        let mut free_slot = Vec::new();
        match method {
            Method::Nc => {
                for e in mesh.interior_edges() {
                    for c in 0..2 {
                        slot_free[2 * e + c] = Some(free_slot.len());
                        free_slot.push(2 * e + c);
                    }
                }
            }
            Method::Ks => {
                for e in mesh.interior_edges() {
                    slot_free[e] = Some(free_slot.len());
                    free_slot.push(e);
                }
                for v in (0..mesh.num_vertices()).filter(|&v| !mesh.is_boundary_vertex(v)) {
                    slot_free[ne + v] = Some(free_slot.len());
                    free_slot.push(ne + v);
                }
            }
        }
        if free_slot.is_empty() {
            return Err(VemError::NoFreeDofs);
        }
        let element_slots = (0..mesh.num_polygons())
            .map(|k| {
                let edges = mesh.polygon_edges(k);
                let verts = mesh.polygon(k);
                let n = edges.len();
                (0..2 * n)
                    .map(|i| match (method, i < n) {
                        (Method::Nc, true) => 2 * edges[i],
                        (Method::Nc, false) => 2 * edges[i - n] + 1,
                        (Method::Ks, true) => edges[i],
                        (Method::Ks, false) => ne + verts[i - n],
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            method,
            slot_free,
            free_slot,
            element_slots,
        })
    }

    pub fn n_free(&self) -> usize {
        self.free_slot.len()
    }

    pub fn n_slots(&self) -> usize {
        self.slot_free.len()
    }

    pub fn element_slots(&self, k: usize) -> &[usize] {
        &self.element_slots[k]
    }

    /// Free index of each local DOF of element `k` (`None` if eliminated).
    pub fn element_free(&self, k: usize) -> Vec<Option<usize>> {
        self.element_slots[k].iter().map(|&s| self.slot_free[s]).collect()
    }

    pub fn slot_free(&self, slot: usize) -> Option<usize> {
        self.slot_free[slot]
    }

    pub fn free_slot(&self, i: usize) -> usize {
        self.free_slot[i]
    }

    /// Spreads free values into a slot vector, eliminated slots set to zero.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_slots()];
        for (i, &slot) in self.free_slot.iter().enumerate() {
            s[slot] = free[i];
        }
        s
    }

    pub fn restrict(&self, slots: &[f64]) -> Vec<f64> {
        self.free_slot.iter().map(|&s| slots[s]).collect()
    }

    /// Local DOF vector of element `k` from a slot vector.
    pub fn gather(&self, k: usize, slots: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.element_slots[k].len(), self.element_slots[k].iter().map(|&s| slots[s]))
    }
}

/// Element data for every polygon, computed in parallel.
pub fn element_systems(mesh: &PolygonalMesh, method: Method, mu: f64, lambda: f64) -> Result<Vec<ElementSystem>> {
    if !(mu > 0.0) || !(lambda >= 0.0) || !mu.is_finite() || !lambda.is_finite() {
        return Err(VemError::InvalidInput(format!(
            "need mu > 0 and lambda >= 0, got mu = {mu}, lambda = {lambda}"
        )));
    }
    (0..mesh.num_polygons())
        .into_par_iter()
        .map(|k| ElementSystem::new(mesh, k, method, mu, lambda))
        .collect()
}

/// Sum of the element stiffness matrices in slot space.
pub fn scatter_stiffness(map: &DofMap, elements: &[ElementSystem]) -> TripletBuilder {
    let batches: Vec<TripletBuilder> = elements
        .par_iter()
        .enumerate()
        .map(|(k, el)| {
            let mut t = TripletBuilder::new(map.n_slots());
            let slots: Vec<Option<usize>> = map.element_slots(k).iter().map(|&s| Some(s)).collect();
            t.add_block(&slots, &el.stiffness.total());
            t
        })
        .collect();
    let mut all = TripletBuilder::new(map.n_slots());
    for b in batches {
        all.extend(b);
    }
    all
}

/// Load vector in slot space: each local DOF of `K` receives
/// `f̄_K · |K| / N_K` in its component, `f̄_K` the element average of `f`.
pub fn assemble_load<F>(mesh: &PolygonalMesh, map: &DofMap, f: F) -> Result<Vec<f64>>
where
    F: Fn(Vec2) -> Vec2 + Sync,
{
    let contributions: Vec<(Vec<usize>, Vec<f64>)> = (0..mesh.num_polygons())
        .into_par_iter()
        .map(|k| {
            let geo = ElementGeometry::from_mesh(mesh, k)?;
            let integral = polygon_integrate_vec(&geo, &f, LOAD_QUADRATURE_DEGREE)?;
            let n = geo.num_edges();
            let dofs = crate::vem::LocalDofSet::new(map.method, n);
            let values = dofs
                .descriptors()
                .map(|d| match d {
                    LocalDof::EdgeMean { component, .. } => integral[component] / n as f64,
                    LocalDof::VertexValue { .. } => integral[1] / n as f64,
                })
                .collect();
            Ok((map.element_slots(k).to_vec(), values))
        })
        .collect::<Result<_>>()?;
    let mut load = vec![0.0; map.n_slots()];
    for (slots, values) in contributions {
        for (s, v) in slots.into_iter().zip(values) {
            load[s] += v;
        }
    }
    Ok(load)
}

/// Global matrix and load before boundary conditions.
#[derive(Debug, Clone)]
pub struct SlotSystem {
    pub matrix: SymmetricCsr,
    pub load: Vec<f64>,
}

impl SlotSystem {
    /// Restricts to the free DOFs. `boundary` holds prescribed slot values
    /// (only eliminated entries are read); `None` means homogeneous data.
    pub fn eliminate(&self, map: &DofMap, boundary: Option<&[f64]>) -> SparseSystem {
        let mut t = TripletBuilder::new(map.n_free());
        let mut rhs = map.restrict(&self.load);
        for (i, j, v) in self.matrix.iter_lower() {
            match (map.slot_free(i), map.slot_free(j)) {
                (Some(fi), Some(fj)) => {
                    t.push(fi.max(fj), fi.min(fj), v);
                }
                (Some(fi), None) => {
                    if let Some(g) = boundary {
                        rhs[fi] -= v * g[j];
                    }
                }
                (None, Some(fj)) => {
                    if let Some(g) = boundary {
                        rhs[fj] -= v * g[i];
                    }
                }
                (None, None) => {}
            }
        }
        SparseSystem {
            matrix: t.into_csr(),
            rhs,
        }
    }
}

/// Slot vector interpolating a smooth field.
pub fn interpolate_slots<F: Fn(Vec2) -> Vec2>(mesh: &PolygonalMesh, map: &DofMap, u: F) -> Result<Vec<f64>> {
    let mut s = vec![0.0; map.n_slots()];
    for k in 0..mesh.num_polygons() {
        let geo = ElementGeometry::from_mesh(mesh, k)?;
        let dofs = crate::vem::LocalDofSet::new(map.method, geo.num_edges());
        let local = interpolate_dofs(&geo, &dofs, &u);
        for (&slot, v) in map.element_slots(k).iter().zip(local.iter()) {
            s[slot] = *v;
        }
    }
    Ok(s)
}

/// Linear solver for global systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    /// Jacobi-preconditioned CG; non-convergence is an error.
    #[default]
    Cg,
    /// RCM-ordered envelope Cholesky.
    Direct,
    /// CG, falling back to the direct solver when CG hits its iteration cap.
    Auto,
}

impl std::str::FromStr for LinearSolver {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(Self::Cg),
            "direct" => Ok(Self::Direct),
            "auto" => Ok(Self::Auto),
            _ => Err(VemError::InvalidInput(format!("unknown solver {s:?}"))),
        }
    }
}

/// Settings for global solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Maximum CG iterations as a multiple of the system size.
    pub max_iter_factor: usize,
    pub solver: LinearSolver,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter_factor: 10,
            solver: LinearSolver::Cg,
        }
    }
}

/// Result of a global solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub map: DofMap,
    /// Free DOF values.
    pub values: Vec<f64>,
    /// Eliminated system, kept for error evaluation.
    pub system: SparseSystem,
    pub iterations: usize,
    pub residual: f64,
}

impl Solution {
    pub fn dofs(&self) -> usize {
        self.values.len()
    }
}

fn direct_solve(system: &SparseSystem) -> Result<(Vec<f64>, f64)> {
    let f = EnvelopeCholesky::new(&system.matrix)?;
    let x = f.solve(&system.rhs);
    let res = system.relative_residual(&x);
    log::debug!("direct: {} unknowns, envelope {}, residual {res:e}", system.dim(), f.envelope_size());
    Ok((x, res))
}

/// Solves the eliminated system. `iterations` is 0 when the direct solver
/// produced the answer.
pub(crate) fn solve_system(map: DofMap, system: SparseSystem, opts: SolveOptions) -> Result<Solution> {
    let max_iter = opts.max_iter_factor.max(1) * system.dim().max(10);
    let (values, iterations, residual) = match opts.solver {
        LinearSolver::Direct => {
            let (x, r) = direct_solve(&system)?;
            (x, 0, r)
        }
        LinearSolver::Cg | LinearSolver::Auto => match cg_solve(&system, opts.tol, max_iter) {
            Ok(out) => {
                log::debug!(
                    "cg: {} unknowns, {} iterations, residual {:e}",
                    system.dim(),
                    out.iterations,
                    out.residual
                );
                (out.solution, out.iterations, out.residual)
            }
            Err(VemError::NoConvergence { iterations, residual }) if opts.solver == LinearSolver::Auto => {
                log::warn!(
                    "cg stalled at residual {residual:e} after {iterations} iterations on {} unknowns; using the direct solver",
                    system.dim()
                );
                let (x, r) = direct_solve(&system)?;
                (x, 0, r)
            }
            Err(e) => return Err(e),
        },
    };
    Ok(Solution {
        map,
        values,
        system,
        iterations,
        residual,
    })
}

/// Dense copy of an eliminated system's matrix, for small verification runs.
pub fn dense_matrix(system: &SparseSystem) -> DMatrix<f64> {
    system.matrix.to_dense()
}
