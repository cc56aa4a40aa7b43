//! Sparse matrices, exact and floating-point rank, dense symmetric solvers
//! and MatrixMarket I/O.

mod dense;
mod exact;
mod market;
mod sparse;

pub use dense::{rank_float, solve_saddle, sym_gen_eig, GenEig, SaddleBlocks, SaddleSolution};
pub use exact::{common_denominator, rank_exact, rank_integer_columns, scale_to_integer, ExactEchelon};
pub use market::{read_matrix_market, write_matrix_market};
pub use sparse::{Scalar, SparseMatrix, SparseVec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfBounds { row: usize, col: usize, nrows: usize, ncols: usize },
    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix market: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
