use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid rank: {0}")]
    InvalidRank(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("not an orthogonal projector: {0}")]
    NotProjector(String),

    #[error("matrix of dimension {dim} exceeds the dense limit {limit}; use the iterative solver")]
    DenseTooLarge { dim: usize, limit: usize },

    #[error("eigensolver did not converge: {0}")]
    NotConverged(String),

    #[error("argument outside the domain of validity: {0}")]
    Domain(String),

    #[error("state space too large: {0}")]
    Overflow(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short stable identifier, used in result tables.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::InvalidRank(_) => "invalid-rank",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NotProjector(_) => "not-projector",
            Error::DenseTooLarge { .. } => "dense-too-large",
            Error::NotConverged(_) => "not-converged",
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Construction(_) => "construction",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
