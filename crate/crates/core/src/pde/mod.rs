//! Problem drivers: explicit heat stepping, steady implicit solves, the sparse
//! solver wrapper and convergence studies.

mod heat;
mod solver;
mod steady;
mod study;

use thiserror::Error;

use crate::approx::ApproxError;
use crate::geometry::GeometryError;
use crate::operators::OperatorError;
use crate::sparse::SparseError;

pub use heat::{run_heat_explicit, stable_time_step, HeatProblem, HeatResult};
pub use solver::{
    solve_sparse, solve_sparse_timed, PreconditionerKind, SolveOutcome, SolverTimings, SparseSolverConfig,
};
pub use steady::{
    assemble_steady, run_manufactured_poisson, sine_product, sine_product_forcing, solve_steady, ManufacturedPoisson,
    PoissonRun, SteadyProblem, TimingBreakdown,
};
pub use study::{
    approximation_study, convergence_study, fit_order, fit_order_h, fit_slope, grid_laplacian_error, reference_setups,
    write_errors_csv, write_records_csv, ApproxSetup, ConvergenceRecord, GRID_DIVISIONS, RECORDS_CSV_HEADER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("weight computation failed at node {node}: {source}")]
    Approx { node: usize, source: ApproxError },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("boundary node {node} needs a normal for its Neumann condition")]
    MissingNormal { node: usize },
    #[error("non-finite value at node {node} in step {step}: dt = {dt:e} exceeds stability; try dt <= h_min^2 / (2d) = {guideline:e}")]
    Unstable {
        step: usize,
        node: usize,
        dt: f64,
        guideline: f64,
    },
    #[error("iterative solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("need at least two resolutions to fit an order, got {0}")]
    TooFewResolutions(usize),
}
