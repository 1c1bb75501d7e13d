//! Explicit finite-volume solvers for degenerate diffusion equations on the
//! periodic torus, plus mechanical certification of the structural
//! inequalities that make their a priori bounds hold: sup-norm gradient
//! non-expansion, range preservation, and the comparison principle.
//!
//! The crate is organized around five building blocks:
//!
//! * [`grid`]: periodic uniform grids and the discrete operators
//!   (centered gradients, conservative divergence, reductions).
//! * [`models`]: the shipped equation families and their closed-form
//!   derivative tables.
//! * [`certify`]: samplers and closed-form reductions that decide whether a
//!   model satisfies the structural inequalities on an admissibility box,
//!   and the exact parameter thresholds.
//! * [`solver`]: forward Euler time stepping under a CFL bound, single runs
//!   and ordered pair runs.
//! * [`diagnostics`]: per-step records, bound verdicts, and the CSV schema.

pub mod certify;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod models;
pub mod solver;
pub mod sym;

pub use certify::{CertOptions, CertReport, Verdict, Witness};
pub use diagnostics::{BoundVerdict, BoundVerdicts, DiagRow, RunDiagnostics};
pub use error::Error;
pub use grid::{PeriodicGrid, ScalarField, VectorField};
pub use models::{AdmissibilityBox, GTable, ModelKind, ModelSpec, PsiTable};
pub use solver::{ComparisonReport, RunOutput, SolverConfig};
pub use sym::SymMat;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
