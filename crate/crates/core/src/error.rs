use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A quadrature did not reach its error budget.
    #[error("quadrature failed to meet budget: achieved {achieved:.3e}, requested {requested:.3e} ({context})")]
    Quadrature {
        achieved: f64,
        requested: f64,
        context: String,
    },
    /// A series or iteration failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),
    /// The model violates a standing assumption (kernel bounds, odd moment, drift bound).
    #[error("model violation: {0}")]
    ModelViolation(String),
    /// A computed value is not finite.
    #[error("non-finite value at {witness}: {what}")]
    NonFinite { what: String, witness: String },
    /// Data inconsistent with the declared field kind.
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
