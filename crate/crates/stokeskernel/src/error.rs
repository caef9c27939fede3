//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (bad key, bad value, violated invariant).
    #[error("configuration error: {0}")]
    Config(String),

    /// A quadrature exhausted its budget before reaching the requested tolerance.
    /// The best value and the achieved error estimate are reported.
    #[error("quadrature did not converge: value {value:.6e}, achieved error {achieved:.3e}, requested {requested:.3e}")]
    NonConvergence {
        value: f64,
        achieved: f64,
        requested: f64,
    },

    /// Two grids or vectors that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Two evaluation routes for the same quantity disagree beyond tolerance.
    #[error("method disagreement: {0}")]
    MethodDisagreement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
