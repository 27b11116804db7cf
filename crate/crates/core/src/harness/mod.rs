//! Manufactured-solution experiments, convergence studies and the
//! diagnostic suite.

pub mod checks;
pub mod diagnostics;
mod errors;
pub mod manufactured;
pub mod study;
pub mod svg;

pub use diagnostics::{run_diagnostics, write_diagnostics, DiagnosticReport, DiagnosticsConfig};
pub use errors::{compute_errors, solve, solve_manufactured, CaseParams, ErrorPair};
pub use manufactured::{exact_forcing, exact_solution};
pub use study::{run_convergence_study, ConvergenceRecord, StudyConfig, StudyReport};
