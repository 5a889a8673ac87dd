use crate::trace::RunTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected (n={}, m={}), got (n={}, m={})", .expected.0, .expected.1, .got.0, .got.1)]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("no unique minimax point: {0}")]
    NoUniqueOptimum(String),

    #[error("unsupported diagnostic: {0}")]
    Unsupported(String),

    #[error("incompatible combination: {0}")]
    Incompatible(String),

    /// The run produced a non-finite iterate or blew past the divergence
    /// threshold. `last_finite` is the last iteration whose iterate was finite.
    #[error("iterate diverged at iteration {iter} (last finite iteration {last_finite})")]
    Diverged {
        iter: u64,
        last_finite: u64,
        partial: Box<RunTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }
}
