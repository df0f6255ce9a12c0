use thiserror::Error;

use crate::space::DgFunction;

/// Diagnostics attached to a failed time step (Newton divergence or
/// a linear-solver breakdown inside the step).
#[derive(Debug)]
pub struct StepFailure {
    /// Index of the step that failed (0-based).
    pub step: usize,
    /// Newton iterations performed before giving up.
    pub newton_iterations: usize,
    /// Residual infinity norm at the last iterate.
    pub residual_norm: f64,
    /// Last Newton iterate, for post-mortem inspection.
    pub last_iterate: DgFunction,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported quadrature degree {requested} (maximum supported: {max})")]
    UnsupportedDegree { requested: usize, max: usize },

    #[error("linear solver failed: {message} (after {iterations} iterations)")]
    SolverFailure { message: String, iterations: usize },

    #[error("config error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("step {} failed: {} (|R| = {:.3e} after {} Newton iterations)",
            .0.step, .0.message, .0.residual_norm, .0.newton_iterations)]
    Step(Box<StepFailure>),

    #[error("diagnostics failed: {0}")]
    Diagnostics(String),

    #[error("interface is empty (no zero crossing of the reconstructed field)")]
    EmptyInterface,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
