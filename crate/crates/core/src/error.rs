use thiserror::Error;

use crate::densela::DenseError;
use crate::oracle::OracleError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operands use different inner-product specs")]
    SpecMismatch,
    #[error("coefficient vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("invalid inner-product spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("Bochner matrices must have at least one row and one column")]
    EmptyShape,
    #[error("index {index} out of bounds 1..={bound}")]
    OutOfBounds { index: usize, bound: usize },
    #[error("column {column} is numerically dependent (residual {residual:e}, original {original:e})")]
    RankDeficient {
        column: usize,
        residual: f64,
        original: f64,
    },
    #[error("matrix is numerically zero")]
    ZeroMatrix,
    #[error("requested rank {requested} outside 1..={available}")]
    BadRank { requested: usize, available: usize },
    #[error("LU pivot breakdown at step {step}")]
    PivotBreakdown { step: usize },
    #[error("zero pivot at ({i}, {j})")]
    ZeroPivot { i: usize, j: usize },
    #[error("cross block A(I,J) is zero")]
    ZeroBlock,
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
