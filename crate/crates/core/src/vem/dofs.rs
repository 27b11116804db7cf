use nalgebra::{DMatrix, DVector};

use crate::geometry::{p1_edge_moments, ElementGeometry, ScaledP1Basis};
use crate::mesh::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Nonconforming space in both components, with jump penalty.
    Nc,
    /// Nonconforming first component, conforming second component.
    Ks,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Nc => "nc",
            Method::Ks => "ks",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::VemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nc" => Ok(Method::Nc),
            "ks" => Ok(Method::Ks),
            other => Err(crate::VemError::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

/// One local degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalDof {
    /// `(1/|e|)∫_e v_c` on local edge `edge`, component `component` (0 or 1).
    EdgeMean { edge: usize, component: usize },
    /// Value of the second component at local vertex `vertex`.
    VertexValue { vertex: usize },
}

/// Local DOF layout.
///
/// NC: `[edge means of v_1, edge means of v_2]`.
/// KS: `[edge means of v_1, vertex values of v_2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDofSet {
    pub method: Method,
    pub n_edges: usize,
}

impl LocalDofSet {
    pub fn new(method: Method, n_edges: usize) -> Self {
        Self { method, n_edges }
    }

    pub fn n_dof(&self) -> usize {
        2 * self.n_edges
    }

    pub fn dof(&self, i: usize) -> LocalDof {
        let ne = self.n_edges;
        assert!(i < 2 * ne);
        match (self.method, i < ne) {
            (_, true) => LocalDof::EdgeMean { edge: i, component: 0 },
            (Method::Nc, false) => LocalDof::EdgeMean {
                edge: i - ne,
                component: 1,
            },
            (Method::Ks, false) => LocalDof::VertexValue { vertex: i - ne },
        }
    }

    pub fn descriptors(&self) -> impl Iterator<Item = LocalDof> + '_ {
        (0..self.n_dof()).map(|i| self.dof(i))
    }

    /// Linear map from DOFs to the edge means of both components, rows
    /// `[v_1 means per edge, v_2 means per edge]`. For KS the second
    /// component is linear on each edge, so its mean is the endpoint average.
    pub fn edge_means_map(&self) -> DMatrix<f64> {
        let ne = self.n_edges;
        let mut t = DMatrix::zeros(2 * ne, self.n_dof());
        for i in 0..ne {
            t[(i, i)] = 1.0;
            match self.method {
                Method::Nc => t[(ne + i, ne + i)] = 1.0,
                Method::Ks => {
                    t[(ne + i, ne + i)] = 0.5;
                    t[(ne + i, ne + (i + 1) % ne)] = 0.5;
                }
            }
        }
        t
    }

    /// DOFs of the six scaled P1 basis fields, as columns (`n_dof × 6`).
    pub fn p1_dof_matrix(&self, geo: &ElementGeometry, basis: &ScaledP1Basis) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_dof(), ScaledP1Basis::DIM);
        for (i, dof) in self.descriptors().enumerate() {
            for j in 0..ScaledP1Basis::DIM {
                d[(i, j)] = match dof {
                    LocalDof::EdgeMean { edge, component } => {
                        basis.value(j, geo.edges[edge].segment.midpoint())[component]
                    }
                    LocalDof::VertexValue { vertex } => basis.value(j, geo.vertices[vertex])[1],
                };
            }
        }
        d
    }
}

/// Local DOFs of a smooth field: edge means by the 8-point Gauss rule,
/// vertex values by evaluation.
pub fn interpolate_dofs<F: Fn(Vec2) -> Vec2>(geo: &ElementGeometry, dofs: &LocalDofSet, u: F) -> DVector<f64> {
    DVector::from_iterator(
        dofs.n_dof(),
        dofs.descriptors().map(|dof| match dof {
            LocalDof::EdgeMean { edge, component } => p1_edge_moments(&geo.edges[edge].segment, |p| u(p)[component]).0,
            LocalDof::VertexValue { vertex } => u(geo.vertices[vertex])[1],
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ElementGeometry {
        ElementGeometry::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn dof_counts() {
        for ne in 3..9 {
            assert_eq!(LocalDofSet::new(Method::Nc, ne).n_dof(), 2 * ne);
            assert_eq!(LocalDofSet::new(Method::Ks, ne).n_dof(), 2 * ne);
        }
        let ks = LocalDofSet::new(Method::Ks, 4);
        assert_eq!(ks.dof(5), LocalDof::VertexValue { vertex: 1 });
        let nc = LocalDofSet::new(Method::Nc, 4);
        assert_eq!(nc.dof(5), LocalDof::EdgeMean { edge: 1, component: 1 });
    }

    #[test]
    fn interpolate_constant_and_linear() {
        let geo = unit_square();
        for method in [Method::Nc, Method::Ks] {
            let d = interpolate_dofs(&geo, &LocalDofSet::new(method, 4), |_| Vec2::new(1.0, 1.0));
            assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
        let d = interpolate_dofs(&geo, &LocalDofSet::new(Method::Nc, 4), |p| Vec2::new(p.x, 0.0));
        for i in 0..4 {
            assert!((d[i] - geo.edges[i].segment.midpoint().x).abs() < 1e-15);
            assert_eq!(d[4 + i], 0.0);
        }
    }

    #[test]
    fn edge_means_map_matches_interpolation_for_linear_fields() {
        let geo = ElementGeometry::new(vec![
            Vec2::new(0.1, 0.0),
            Vec2::new(0.9, 0.2),
            Vec2::new(1.0, 0.7),
            Vec2::new(0.4, 1.0),
            Vec2::new(0.0, 0.5),
        ])
        .unwrap();
        let u = |p: Vec2| Vec2::new(0.3 - p.x + 2.0 * p.y, 1.0 + 0.5 * p.x - p.y);
        let ks = LocalDofSet::new(Method::Ks, 5);
        let means = ks.edge_means_map() * interpolate_dofs(&geo, &ks, u);
        let direct = interpolate_dofs(&geo, &LocalDofSet::new(Method::Nc, 5), u);
        assert!((means - direct).amax() < 1e-14);
    }
}
