//! Domain shapes, node generation and stencil selection.

mod boundary;
mod domain;
mod fill;
mod grid;
mod kdtree;
mod shape;
mod stencil;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::Point;

pub use boundary::discretize_boundary;
pub use domain::{DomainDiscretization, NodeFilter};
pub use fill::{fill_interior, fill_interior_from, CANDIDATES_PER_NODE, MIN_DISTANCE_FACTOR};
pub use kdtree::KdTree;
pub use shape::{Shape, DEFAULT_BOUNDARY_TYPE};
pub use stencil::{find_closest_stencils, find_closest_stencils_from};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid node type {0}: boundary types must be negative and interior types positive")]
    InvalidTag(i32),
    #[error("type tag 0 is reserved")]
    ReservedTag,
    #[error("spacing function returned {value} at {point}; it must be positive and finite")]
    NonPositiveSpacing { value: f64, point: String },
    #[error("shape is unbounded or has a non-finite bounding box")]
    Unbounded,
    #[error("{0} is not supported")]
    Unsupported(String),
    #[error("interior fill needs at least one seed node (boundary nodes or an explicit starting point)")]
    EmptySeed,
    #[error("node {node}: requested stencil of {requested} nodes but only {available} candidates exist")]
    NotEnoughCandidates {
        node: usize,
        requested: usize,
        available: usize,
    },
    #[error("node {node} is selected for a stencil but is not among the searched nodes")]
    NotInSearchSet { node: usize },
    #[error("stencil size must be positive")]
    EmptyStencil,
    #[error("node index {index} out of range for domain of {size} nodes")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("boundary node {node} has no normal")]
    MissingNormal { node: usize },
    #[error("normal of node {node} has length {length}, expected 1")]
    BadNormal { node: usize, length: f64 },
}

/// Nodal spacing `h(p) > 0`.
#[derive(Clone)]
pub struct Spacing<const D: usize>(Arc<dyn Fn(&Point<D>) -> f64 + Send + Sync>);

impl<const D: usize> Spacing<D> {
    pub fn constant(h: f64) -> Self {
        Spacing(Arc::new(move |_| h))
    }

    pub fn new(f: impl Fn(&Point<D>) -> f64 + Send + Sync + 'static) -> Self {
        Spacing(Arc::new(f))
    }

    /// Raw evaluation, no validation.
    pub fn eval(&self, p: &Point<D>) -> f64 {
        (self.0)(p)
    }

    /// Evaluates and rejects non-positive or non-finite values.
    pub fn checked(&self, p: &Point<D>) -> Result<f64, GeometryError> {
        let h = self.eval(p);
        if h > 0.0 && h.is_finite() {
            Ok(h)
        } else {
            Err(GeometryError::NonPositiveSpacing {
                value: h,
                point: format!("{:?}", p.as_slice()),
            })
        }
    }
}

impl<const D: usize> fmt::Debug for Spacing<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Spacing(..)")
    }
}
