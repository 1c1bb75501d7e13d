use thiserror::Error;

/// Everything that can go wrong across the crate.
///
/// Variants are grouped by life stage: construction, evaluation
/// preconditions, and runtime failures of a simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: String, detail: String },

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    /// An evaluation point left the admissibility box. `bound` names the
    /// violated side, e.g. "u_hi" or "grad_sq_max".
    #[error("domain violation: {bound} (value {value}, allowed {limit})")]
    DomainViolation {
        bound: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("time step {dt} exceeds the stability bound {dt_max}")]
    CflViolation { dt: f64, dt_max: f64 },

    /// Non-finite values or range expansion after a step.
    #[error("instability at step {step} (t = {t}): {detail}")]
    Instability { step: usize, t: f64, detail: String },

    /// The evolving field left the admissibility box.
    #[error("field left the admissibility box at step {step} (t = {t}): {detail}")]
    BoxExit { step: usize, t: f64, detail: String },

    #[error("comparison precondition violated: {0}")]
    OrderingViolated(String),

    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_parameter(name: &str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            detail: detail.into(),
        }
    }
}
