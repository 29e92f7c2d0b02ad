//! Matrices whose entries live in a Hilbert space: algebra, decompositions
//! and cross approximation.
//!
//! Entries are coefficient vectors paired by an [`InnerProductSpec`]. A
//! [`BochnerMatrix`] stores an `m x n` grid of them and can be multiplied by
//! ordinary matrices from either side. On top of that the crate provides
//! QR, SVD, pseudoinverse, HOSVD and LU factorisations, cross components,
//! the ABCD and ABCDX index-selection algorithms, and a subprocess protocol
//! for sampling matrices from an external solver.
//!
//! Row and column indices are 1-based throughout the Bochner-level API.
//! [`DenseMatrix`] is a plain 0-based scalar matrix.

pub mod cross;
pub mod decomp;
pub mod densela;
pub mod error;
pub mod hilbert;
pub mod matrix;
pub mod oracle;

pub use cross::{
    abcd, abcd_with_rng, abcdx, cross_component, rank_one_cross, rook_pivot, AbcdResult, AbcdStep, AbcdxOptions,
    AbcdxResult, AbcdxRound, BochnerView, DifferenceView, Dyad, DyadicForm, ResidualView,
};
pub use decomp::{
    bochner_lu, bochner_qr, bochner_svd, column_rank, hosvd, least_squares, pinv_apply, pivoted_qr, row_rank,
    truncated_svd, BochnerLu, BochnerQr, BochnerSvd, ColumnSideForm, HosvdBasis, Pseudoinverse, TuckerForm,
    BOCHNER_RTOL,
};
pub use densela::DenseMatrix;
pub use error::{Error, Result};
pub use hilbert::{combine, gram_matrix, inner, HElement, InnerProductSpec};
pub use matrix::{
    adjoint_product, l2_inner, spectral_norm_lb, stock_dimension, BochnerMatrix, IndexSet, LpNorm, Side,
    StockDimension,
};
pub use oracle::{oracle_handshake, MatrixAccessor, OracleError, OracleHello};
