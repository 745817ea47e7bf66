use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectrum must contain at least one level")]
    EmptySpectrum,

    #[error("energy at index {index} is not finite ({value})")]
    NonFiniteEnergy { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("spectrum is not a ladder: {0}")]
    NotLadder(String),

    #[error("weights do not form an exact cycle: {0}")]
    NotCycle(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
