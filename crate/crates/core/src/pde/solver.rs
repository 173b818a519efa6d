use std::time::Instant;

use crate::sparse::{bicgstab, CsrMatrix, Ilut, Preconditioner};

use super::PdeError;

/// Preconditioner of the iterative solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PreconditionerKind {
    None,
    Ilut { fill: usize, drop: f64 },
}

impl Default for PreconditionerKind {
    fn default() -> Self {
        PreconditionerKind::Ilut { fill: 5, drop: 1e-2 }
    }
}

/// BiCGStab settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseSolverConfig {
    /// Relative residual `||M u - r|| / ||r||` to reach.
    pub tol: f64,
    /// Defaults to `10 N`.
    pub max_iter: Option<usize>,
    pub preconditioner: PreconditionerKind,
}

impl Default for SparseSolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            preconditioner: PreconditionerKind::default(),
        }
    }
}

impl SparseSolverConfig {
    pub fn validate(&self) -> Result<(), PdeError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(PdeError::InvalidParameter(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if let PreconditionerKind::Ilut { drop, .. } = self.preconditioner {
            if !(drop >= 0.0 && drop.is_finite()) {
                return Err(PdeError::InvalidParameter(format!(
                    "ILUT drop tolerance must be nonnegative, got {drop}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Relative residual recomputed from the returned solution.
    pub residual: f64,
    pub converged: bool,
}

/// Wall times of the two solver phases, in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverTimings {
    pub preconditioner: f64,
    pub iterative_solve: f64,
}

/// Solves `M u = r` with (preconditioned) BiCGStab. Non-convergence is not an
/// error: the outcome then carries the best iterate and `converged = false`.
pub fn solve_sparse(m: &CsrMatrix, r: &[f64], config: &SparseSolverConfig) -> Result<SolveOutcome, PdeError> {
    solve_sparse_timed(m, r, config).map(|(o, _)| o)
}

pub fn solve_sparse_timed(
    m: &CsrMatrix,
    r: &[f64],
    config: &SparseSolverConfig,
) -> Result<(SolveOutcome, SolverTimings), PdeError> {
    config.validate()?;
    let start = Instant::now();
    let precond = match config.preconditioner {
        PreconditionerKind::None => Preconditioner::Identity,
        PreconditionerKind::Ilut { fill, drop } => Preconditioner::Ilut(Ilut::new(m, fill, drop)?),
    };
    let t_precond = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let max_iter = config.max_iter.unwrap_or(10 * m.nrows().max(1));
    let out = bicgstab(m, r, &precond, config.tol, max_iter)?;
    let t_solve = start.elapsed().as_secs_f64();
    Ok((
        SolveOutcome {
            solution: out.solution,
            iterations: out.iterations,
            residual: out.residual,
            converged: out.converged,
        },
        SolverTimings {
            preconditioner: t_precond,
            iterative_solve: t_solve,
        },
    ))
}
