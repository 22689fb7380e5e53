use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the command-line harness to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input.
    Config,
    /// A physically meaningless configuration (photon budget, visibility,
    /// linearized click probability above one).
    Physics,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("vector is empty")]
    EmptyVector,

    #[error("vector is not unit length (norm^2 = {norm_sq})")]
    NotUnit { norm_sq: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("value {value} outside [{min}, {max}] for {what}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("visibility nu = {0} must exceed 0.5")]
    Visibility(f64),

    #[error("photon budget mu*k/n = {budget} must be < 1")]
    PhotonBudget { budget: f64 },

    #[error("n = {n} is not divisible by k = {k}")]
    Indivisible { n: usize, k: usize },

    #[error("linearized click probability {value} at slot {slot} exceeds 1")]
    ProbabilityOverflow { slot: usize, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Visibility(_) | Error::PhotonBudget { .. } | Error::ProbabilityOverflow { .. } => {
                ErrorKind::Physics
            }
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Config,
        }
    }

    pub(crate) fn out_of_range(what: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::OutOfRange {
            what,
            value,
            min,
            max,
        }
    }
}
