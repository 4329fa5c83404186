use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchroError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parameter outside its domain: {0}")]
    Domain(String),

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("profile has {got} values but the grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("no shooting bracket found for the center value in (1, 10)")]
    NoShootingBracket,

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("Jacobian is numerically singular (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("pair cannot be projected onto the Nehari manifold: quartic term {denominator:e} is not positive")]
    NotProjectable { denominator: f64 },

    #[error("quadratic form {numerator:e} is not positive at this pair")]
    NotCoercive { numerator: f64 },

    #[error("pair has a vanishing component (projection factor would be {t})")]
    DegenerateComponent { t: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SchroError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SchroError::Domain(msg.into())
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            SchroError::Config(_) | SchroError::Domain(_) | SchroError::GridMismatch | SchroError::ShapeMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SchroError>;
