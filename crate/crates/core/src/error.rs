use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Newton iteration hit its cap or stopped making progress.
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    /// A solver failure inside a multi-step run, tagged with the failing step.
    #[error("step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate gain: {0}")]
    DegenerateGain(String),

    #[error("degenerate linearization: {0}")]
    DegenerateLinearization(String),

    #[error("configuration error: {0}")]
    Config(#[from] crate::scenario::ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors raised by the root solver (directly or at a step).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::SingularJacobian { .. } => true,
            Error::StepFailed { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::StepFailed { .. } => e,
            e => Error::StepFailed {
                step,
                source: Box::new(e),
            },
        }
    }
}
