//! Stencil weights for whole domains and the operators built on them.
//!
//! [`compute_shapes`] fills a [`ShapeStorage`] with weights for a set of
//! operator families. The storage evaluates operators explicitly on fields,
//! and [`SparseSystem`] uses it to assemble implicit equations row by row.

mod explicit;
mod implicit;
mod shapes;

use thiserror::Error;

use crate::approx::ApproxError;

pub use implicit::{RowKind, SparseSystem};
pub use shapes::{
    compute_shapes, compute_shapes_with_threads, threads_from_env, Family, ShapeRequest, ShapeStorage, THREADS_ENV_VAR,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("weight computation failed at node {node}: {source}")]
    Weights { node: usize, source: ApproxError },
    #[error("node {node} has no stencil")]
    MissingStencil { node: usize },
    #[error("operator family {family} is not stored")]
    UnstoredFamily { family: String },
    #[error("no weights stored for node {node}")]
    NodeNotComputed { node: usize },
    #[error("node index {index} out of range for {size} nodes")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("field has {actual} values, domain has {expected} nodes")]
    FieldLength { expected: usize, actual: usize },
    #[error("unsupported operator for stored shapes: {0}")]
    Unsupported(String),
    #[error("ill-posed Neumann condition at node {node}: normal derivative weight of the node itself is {weight:e}")]
    IllPosedNeumann { node: usize, weight: f64 },
    #[error("row {row} cannot receive equations of node {node}")]
    RowOwnership { row: usize, node: usize },
    #[error("row {row} already holds a {existing} equation, cannot add a {requested} one")]
    RowConflict {
        row: usize,
        existing: &'static str,
        requested: &'static str,
    },
    #[error("row {row} was never assembled")]
    UnassembledRow { row: usize },
    #[error("custom operator name {0:?} registered twice")]
    DuplicateCustom(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}
