//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by construction, numerics, execution, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fails a constructor's validity requirements.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A utility function was evaluated outside its domain.
    #[error("utility evaluated at invalid runtime {0}")]
    InvalidRuntime(f64),

    /// A quantile was requested at a probability outside [0, 1), or at a
    /// level with no finite quantile.
    #[error("quantile undefined at probability {0}")]
    QuantileUndefined(f64),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge on [{lo}, {hi}] (best error {err:.3e})")]
    QuadratureDiverged { lo: f64, hi: f64, err: f64 },

    /// A dataset column ran out of fresh instances mid-procedure.
    #[error("runtime source exhausted: algorithm {algorithm} has no instance {instance}")]
    SourceExhausted { algorithm: String, instance: usize },

    /// A cached record was requested below the captime it was observed at.
    #[error("captime regression: algorithm {algorithm} cached at {cached} requested at {requested}")]
    CaptimeRegression {
        algorithm: String,
        cached: f64,
        requested: f64,
    },

    /// The requested configuration cannot satisfy its guarantee.
    #[error("infeasible request: {0}")]
    Infeasible(String),

    /// Malformed input data (dataset matrix or distribution file).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV parse or encode failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON parse or encode failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
