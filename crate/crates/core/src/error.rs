use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid mode mapping: {0}")]
    InvalidMapping(String),

    #[error("unknown port `{0}`")]
    UnknownPort(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("post-selection kept nothing (probability {0:e})")]
    EmptyPostSelection(f64),

    #[error("measurement settings are rank deficient (rank {rank} < {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("invalid analyzer settings: {0}")]
    InvalidSettings(String),

    #[error("count overflow in setting `{0}`")]
    CountOverflow(String),

    #[error("configuration error:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed count file: {0}")]
    CountFile(String),

    #[error("fit did not converge: {0}")]
    Convergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
