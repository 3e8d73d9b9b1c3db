use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented invariant.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("no guided mode: n_eff = {n_eff:.6} does not exceed ambient index {n_ambient}")]
    NoGuidedMode { n_eff: f64, n_ambient: f64 },

    #[error("{solver} not converged after {iterations} iterations (last change {last_change:.3e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("{solver} diverged after {iterations} iterations")]
    Diverged { solver: &'static str, iterations: usize },

    #[error("no trap: {0}")]
    NoTrap(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("sweep grid has {points} points, cap is {cap}")]
    CapExceeded { points: usize, cap: usize },

    #[error("all {0} grid points are infeasible")]
    Infeasible(usize),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of an iterative solver, as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::Diverged { .. } | Error::Bracket(_)
        )
    }

    /// Short machine-readable tag used in sweep status columns.
    pub fn status(&self) -> &'static str {
        match self {
            Error::Invalid { .. } => "invalid",
            Error::NoGuidedMode { .. } => "no guided mode",
            Error::NotConverged { .. } => "not converged",
            Error::Diverged { .. } => "diverged",
            Error::NoTrap(_) => "no trap",
            Error::GridMismatch(_) => "grid mismatch",
            Error::Bracket(_) => "bracket failure",
            Error::CapExceeded { .. } => "cap exceeded",
            Error::Infeasible(_) => "infeasible",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => "io error",
        }
    }
}

/// Returns `Err(Invalid)` unless `value` is finite and strictly positive.
pub(crate) fn require_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive, got {value}")))
    }
}
