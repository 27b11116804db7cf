use thiserror::Error;

pub type Result<T> = std::result::Result<T, VemError>;

#[derive(Debug, Error)]
pub enum VemError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("duplicate vertices {first} and {second} (distance {distance:e})")]
    DuplicateVertex {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("non-manifold edge ({a}, {b}): shared by more than two polygons")]
    NonManifoldEdge { a: usize, b: usize },

    #[error("degenerate polygon {polygon}: {reason}")]
    DegeneratePolygon { polygon: usize, reason: String },

    #[error("mesh does not cover the unit square: {0}")]
    Coverage(String),

    #[error("element {element} violates mesh regularity: {reason}")]
    Regularity { element: usize, reason: String },

    #[error("projector system is singular on element {element}")]
    SingularProjector { element: usize },

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error(
        "matrix is not positive definite: p^T A p = {curvature:e} at CG iteration {iteration} \
         (Korn inequality or boundary elimination failed)"
    )]
    NotPositiveDefinite { iteration: usize, curvature: f64 },

    #[error("CG did not converge: {iterations} iterations, relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unsupported quadrature degree {0} (max 7)")]
    UnsupportedDegree(usize),

    #[error("no free degrees of freedom: mesh too coarse")]
    NoFreeDofs,

    #[error("dense problem too large: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
