//! Building blocks for strong-form meshless PDE solvers.
//!
//! The pipeline is split into independent pieces that can be recombined:
//!
//! * [`geometry`]: constructive solid geometry shapes, boundary and interior node
//!   generation with variable spacing, ghost nodes and closest-node stencils.
//! * [`approx`]: stencil weights for linear differential operators, computed either by
//!   generalized weighted least squares (GWLS) or by RBF-FD with monomial augmentation.
//! * [`operators`]: batch weight computation over a whole domain ([`operators::ShapeStorage`]),
//!   explicit operator evaluation and implicit sparse row assembly.
//! * [`sparse`]: a compressed sparse row matrix used by the implicit operators.
//! * [`pde`]: BiCGStab/ILUT solver, explicit heat driver, implicit steady drivers and the
//!   convergence/timing study harness.
//! * [`io`]: CSV import/export of node clouds and fields.
//!
//! ```
//! use meshless::approx::{ApproxEngine, Operator, Rbf};
//! use meshless::Point;
//!
//! let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 1);
//! let h = 0.1;
//! let stencil = [Point::<1>::new(0.0), Point::<1>::new(-h), Point::<1>::new(h)];
//! let w = engine.weights(&stencil, &stencil[0], &Operator::Derivative(0)).unwrap();
//! assert!((w[2] - 5.0).abs() < 1e-9);
//! ```

// NaN must fail the positive/finite checks, hence `!(x > 0.0)` style tests.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod geometry;
pub mod io;
pub mod operators;
pub mod pde;
pub mod sparse;

/// A point (or vector) in `D`-dimensional space.
pub type Point<const D: usize> = nalgebra::SVector<f64, D>;

/// Rotation/linear map in `D` dimensions.
pub type Matrix<const D: usize> = nalgebra::SMatrix<f64, D, D>;
