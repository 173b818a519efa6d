//! Compressed sparse row matrices, ILUT preconditioning and BiCGStab.

mod bicgstab;
mod csr;
mod ilut;

use thiserror::Error;

pub use bicgstab::{bicgstab, IterativeOutcome, Preconditioner};
pub use csr::CsrMatrix;
pub use ilut::Ilut;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("column index {col} out of range for {ncols} columns in row {row}")]
    ColumnOutOfRange { row: usize, col: usize, ncols: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("structurally singular matrix: row {row} is empty")]
    EmptyRow { row: usize },
    #[error("invalid ILUT parameters: {0}")]
    InvalidParameter(String),
}
