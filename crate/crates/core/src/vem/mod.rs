//! Element-local virtual element machinery shared by both methods.
//!
//! Everything here is computed from degrees of freedom alone: the
//! energy projector onto vector P1, the constant projection of the
//! divergence, the DOF-based stabilisation and the local stiffness.

mod dofs;
mod projector;
mod stiffness;

pub use dofs::{interpolate_dofs, LocalDof, LocalDofSet, Method};
pub use projector::{build_projector, LocalProjector};
pub use stiffness::{
    build_local_stiffness, build_stabilization, exact_local_energy, local_consistency_check,
    ConsistencyResidual, LocalStiffness,
};

use crate::error::Result;
use crate::geometry::ElementGeometry;
use crate::mesh::PolygonalMesh;

/// All element-level data needed by global assembly.
#[derive(Debug, Clone)]
pub struct ElementSystem {
    pub geometry: ElementGeometry,
    pub dofs: LocalDofSet,
    pub projector: LocalProjector,
    pub stiffness: LocalStiffness,
}

impl ElementSystem {
    pub fn new(mesh: &PolygonalMesh, k: usize, method: Method, mu: f64, lambda: f64) -> Result<Self> {
        let geometry = ElementGeometry::from_mesh(mesh, k)?;
        let dofs = LocalDofSet::new(method, geometry.num_edges());
        let projector = build_projector(&geometry, &dofs).map_err(|e| match e {
            crate::VemError::SingularProjector { .. } => crate::VemError::SingularProjector { element: k },
            other => other,
        })?;
        let stiffness = build_local_stiffness(&geometry, &dofs, &projector, mu, lambda);
        Ok(Self {
            geometry,
            dofs,
            projector,
            stiffness,
        })
    }
}
