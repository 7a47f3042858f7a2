//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any distillforge component.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row {0} has near-zero norm (< 1e-30)")]
    ZeroNormRow(usize),

    #[error("shape mismatch in {context}: {lhs} vs {rhs}")]
    ShapeMismatch {
        context: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("batch size mismatch: {0} vs {1}")]
    BatchMismatch(usize, usize),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("cosine loss needs matching dimensions: student {0}, teacher {1}")]
    CosineDimMismatch(usize, usize),

    #[error("non-finite value during function evaluation")]
    NonFiniteEvaluation,

    #[error("non-finite loss at stage {stage} step {step} ({detail})")]
    NonFiniteLoss {
        stage: u8,
        step: u64,
        detail: String,
    },

    #[error("missing key: {0}")]
    MissingKey(String),

    #[error("missing qrel for query {0}")]
    MissingQrel(usize),

    #[error("format error at byte {offset}: {msg}")]
    FormatError { offset: u64, msg: String },

    #[error("unsupported format version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("empty token sequence for image {0}")]
    EmptyTokenSequence(usize),

    #[error("data exhausted after {0} batches")]
    DataExhausted(u64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a [`Error::ShapeMismatch`] built from two matrix shapes.
    pub fn shape(context: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::ShapeMismatch {
            context,
            lhs: format!("{}x{}", lhs.0, lhs.1),
            rhs: format!("{}x{}", rhs.0, rhs.1),
        }
    }
}
