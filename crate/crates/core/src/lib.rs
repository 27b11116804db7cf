pub mod error;
pub mod geometry;
pub mod linsolve;
pub mod mesh;
pub mod vem;
pub mod assembly;
pub mod method_nc;
pub mod method_ks;
pub mod harness;

pub use error::{Result, VemError};
