use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("instant {0} is not a point of the time scale")]
    NotAMember(f64),

    #[error("invalid time scale: {0}")]
    InvalidScale(String),

    #[error("invalid interval [{a}, {b}]: need a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error(
        "delta derivative of order {order} needs at least {needed} points, scale has {points}"
    )]
    DomainExhausted {
        order: usize,
        needed: usize,
        points: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("grid functions live on different time scales")]
    ScaleMismatch,

    #[error("step matrix I + mu(t) A is singular at t = {0} (system is not regressive)")]
    NonRegressive(f64),

    #[error("degenerate system: {context} (singular at t = {instant})")]
    Degenerate { context: String, instant: f64 },

    #[error("player {player}: cost is not strictly convex in own controls")]
    NonConvex { player: usize },

    /// Field-addressed validation failure, e.g. `Q[1]: not symmetric`.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn shape(message: impl Into<String>) -> Self {
        Error::ShapeMismatch(message.into())
    }
}
