use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input (weights, configuration, dimensions).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("no phase crossing: the loop phase never reaches pi (M <= 2)")]
    NoPhaseCrossing,

    #[error("coupling is disconnected (algebraic connectivity is zero), synchronization manifold analysis inapplicable")]
    Disconnected,

    #[error("synchronization analysis needs at least two oscillators")]
    SingleOscillator,

    /// The state became non-finite during integration.
    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
