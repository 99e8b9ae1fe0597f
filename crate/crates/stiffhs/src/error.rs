//! Crate-wide error type with CLI exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's arguments was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scenario/configuration validation failed; all failures are listed.
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    /// An iterative solver ran out of iterations.
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The time stepper produced NaN or an inadmissible negative value.
    #[error("numerical failure at t = {t:.6e}: {reason}\nstate dump: {dump}")]
    Numerical { t: f64, reason: String, dump: String },

    /// The requested operation does not support this scenario.
    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    /// Internal misuse of the API (e.g. advancing a front through g = infinity).
    #[error("logic error: {0}")]
    Logic(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit status for the CLI: 2 for validation/environment failures, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Unsupported(_) | Error::Json(_) => 2,
            Error::Io(_) => 2,
            Error::NonConvergence { .. } | Error::Numerical { .. } | Error::Logic(_) => 3,
        }
    }
}
