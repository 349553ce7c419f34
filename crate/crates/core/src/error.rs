use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate grouping: {0}")]
    DegenerateGrouping(String),

    #[error("projection annihilates all variation (alpha'(B+W)alpha = {0:e})")]
    AnnihilatingProjection(f64),

    #[error(
        "between+within scatter is near-singular (condition estimate {condition:e}); \
         apply PDA regularization (index = pda with lambda > 0)"
    )]
    NearSingular { condition: f64 },

    #[error("empty group")]
    EmptyGroup,

    #[error("invalid split rule {0}: valid range is 1-8")]
    InvalidRule(u8),

    #[error("no separation on projection: all projected class means are equal")]
    NoSeparation,

    #[error("empty subset")]
    EmptySubset,

    #[error("no candidate splits: all projected values are identical")]
    NoCandidateSplits,

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model document: {0}")]
    Model(String),

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
