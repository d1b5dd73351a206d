use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CcaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CcaError {
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix has zero rows or zero columns")]
    EmptyMatrix,
    #[error("row count {rows} is not a power of two")]
    NotPowerOfTwo { rows: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row counts differ: A has {a} rows, B has {b}")]
    RowCountMismatch { a: usize, b: usize },
    #[error("matrix {which} has numerical rank zero")]
    RankZero { which: &'static str },
    #[error("sketch lost rank on {which}: rank {before} before, {after} after (sample size too small?)")]
    RankCollapse {
        which: &'static str,
        before: usize,
        after: usize,
    },
    #[error("invalid sample size r={r} for m={m}")]
    InvalidSampleSize { r: usize, m: usize },
    #[error("invalid accuracy parameters: {0}")]
    InvalidAccuracy(String),
    #[error("instance too large for the definition oracle: n={n}, l={ell} (max 3)")]
    TooLarge { n: usize, ell: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("lemma hypothesis cannot be verified: {0}")]
    HypothesisUnverifiable(String),
    #[error("dataset not found: {}", .0.display())]
    DatasetNotFound(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CcaError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        CcaError::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for failures caused by the numbers rather than by the input shape or files.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CcaError::RankZero { .. } | CcaError::RankCollapse { .. } | CcaError::NonFinite
        )
    }
}
