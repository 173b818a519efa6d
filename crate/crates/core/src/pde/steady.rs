use std::time::Instant;

use crate::approx::ApproxEngine;
use crate::geometry::{
    discretize_boundary, fill_interior, find_closest_stencils, DomainDiscretization, NodeFilter, Shape, Spacing,
};
use crate::operators::{compute_shapes, Family, ShapeRequest, ShapeStorage, SparseSystem};
use crate::Point;

use super::solver::{solve_sparse_timed, SolveOutcome, SparseSolverConfig};
use super::PdeError;

/// `sum_k c_k L_k u = f` inside, with Dirichlet data on boundary nodes except
/// those whose type is in `neumann_types`, where `du/dn = g_n`.
pub struct SteadyProblem<'a, const D: usize> {
    pub terms: Vec<(f64, Family)>,
    pub rhs: &'a (dyn Fn(&Point<D>) -> f64 + Sync),
    pub dirichlet: &'a (dyn Fn(&Point<D>) -> f64 + Sync),
    pub neumann: &'a (dyn Fn(&Point<D>) -> f64 + Sync),
    pub neumann_types: &'a [i32],
}

/// Seconds spent in each stage of an implicit solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TimingBreakdown {
    pub domain_discretization: f64,
    pub stencil_selection: f64,
    pub weight_computation: f64,
    pub matrix_assembly: f64,
    pub preconditioner: f64,
    pub iterative_solve: f64,
    pub error_computation: f64,
}

impl TimingBreakdown {
    pub const STAGES: [&'static str; 7] = [
        "domain_discretization",
        "stencil_selection",
        "weight_computation",
        "matrix_assembly",
        "preconditioner",
        "iterative_solve",
        "error_computation",
    ];

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.domain_discretization,
            self.stencil_selection,
            self.weight_computation,
            self.matrix_assembly,
            self.preconditioner,
            self.iterative_solve,
            self.error_computation,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            domain_discretization: a[0],
            stencil_selection: a[1],
            weight_computation: a[2],
            matrix_assembly: a[3],
            preconditioner: a[4],
            iterative_solve: a[5],
            error_computation: a[6],
        }
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

/// Builds the sparse system of a steady problem from precomputed shapes.
pub fn assemble_steady<const D: usize>(
    domain: &DomainDiscretization<D>,
    storage: &ShapeStorage<D>,
    problem: &SteadyProblem<'_, D>,
) -> Result<SparseSystem, PdeError> {
    let mut system = SparseSystem::new(domain.size());
    for i in 0..domain.size() {
        let t = domain.type_of(i);
        let p = domain.pos(i);
        if t > 0 {
            system.assemble_interior_row(storage, i, &problem.terms, (problem.rhs)(p))?;
        } else if problem.neumann_types.contains(&t) {
            let normal = domain.normal(i).ok_or(PdeError::MissingNormal { node: i })?;
            system.assemble_neumann_row(storage, i, normal, (problem.neumann)(p))?;
        } else {
            system.assemble_dirichlet_row(i, (problem.dirichlet)(p))?;
        }
    }
    Ok(system)
}

/// Assembles and solves a steady problem; fails if the solver does not reach
/// its tolerance.
pub fn solve_steady<const D: usize>(
    domain: &DomainDiscretization<D>,
    storage: &ShapeStorage<D>,
    problem: &SteadyProblem<'_, D>,
    config: &SparseSolverConfig,
) -> Result<SolveOutcome, PdeError> {
    let (m, r) = assemble_steady(domain, storage, problem)?.finalize()?;
    let (out, _) = solve_sparse_timed(&m, &r, config)?;
    if !out.converged {
        return Err(PdeError::NotConverged {
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    Ok(out)
}

/// A Poisson problem `-lap u = f` with a known solution `u0`, Dirichlet data
/// `u0` on the whole boundary, discretized from scratch with constant spacing.
#[derive(Clone, Debug)]
pub struct ManufacturedPoisson<const D: usize> {
    pub shape: Shape<D>,
    pub h: f64,
    pub seed: u64,
    pub stencil_size: usize,
    pub engine: ApproxEngine,
    pub solver: SparseSolverConfig,
    pub exact: fn(&Point<D>) -> f64,
    /// `-lap u0`.
    pub forcing: fn(&Point<D>) -> f64,
}

/// `u0 = prod_i sin(pi x_i)`.
pub fn sine_product<const D: usize>(p: &Point<D>) -> f64 {
    p.iter().map(|x| (std::f64::consts::PI * x).sin()).product()
}

/// `-lap` of [`sine_product`], `d pi^2 u0`.
pub fn sine_product_forcing<const D: usize>(p: &Point<D>) -> f64 {
    D as f64 * std::f64::consts::PI.powi(2) * sine_product(p)
}

/// Result of one manufactured solve.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonRun<const D: usize> {
    pub nodes: usize,
    pub e_inf: f64,
    pub timings: TimingBreakdown,
    /// Wall time of the whole run, for checking the breakdown.
    pub wall: f64,
    pub outcome: SolveOutcome,
    pub domain: DomainDiscretization<D>,
}

/// Runs the full pipeline, timing each stage separately.
pub fn run_manufactured_poisson<const D: usize>(case: &ManufacturedPoisson<D>) -> Result<PoissonRun<D>, PdeError> {
    let wall = Instant::now();
    let mut timings = TimingBreakdown::default();

    let start = Instant::now();
    let spacing = Spacing::constant(case.h);
    let mut domain = discretize_boundary(&case.shape, &spacing, case.seed)?;
    fill_interior(&mut domain, &case.shape, &spacing, case.seed.wrapping_add(1))?;
    timings.domain_discretization = start.elapsed().as_secs_f64();

    let start = Instant::now();
    find_closest_stencils(&mut domain, case.stencil_size, &NodeFilter::Interior, &NodeFilter::All)?;
    timings.stencil_selection = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let storage = compute_shapes(
        &domain,
        &case.engine,
        &ShapeRequest::new().laplacian(),
        &NodeFilter::Interior,
    )?;
    timings.weight_computation = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let forcing = |p: &Point<D>| (case.forcing)(p);
    let exact = |p: &Point<D>| (case.exact)(p);
    let zero = |_: &Point<D>| 0.0;
    let problem = SteadyProblem {
        terms: vec![(-1.0, Family::Laplacian)],
        rhs: &forcing,
        dirichlet: &exact,
        neumann: &zero,
        neumann_types: &[],
    };
    let (m, r) = assemble_steady(&domain, &storage, &problem)?.finalize()?;
    timings.matrix_assembly = start.elapsed().as_secs_f64();

    let (outcome, st) = solve_sparse_timed(&m, &r, &case.solver)?;
    timings.preconditioner = st.preconditioner;
    timings.iterative_solve = st.iterative_solve;
    if !outcome.converged {
        return Err(PdeError::NotConverged {
            iterations: outcome.iterations,
            residual: outcome.residual,
        });
    }

    let start = Instant::now();
    let e_inf = domain
        .positions()
        .iter()
        .zip(&outcome.solution)
        .map(|(p, u)| (u - (case.exact)(p)).abs())
        .fold(0.0, f64::max);
    timings.error_computation = start.elapsed().as_secs_f64();

    Ok(PoissonRun {
        nodes: domain.size(),
        e_inf,
        timings,
        wall: wall.elapsed().as_secs_f64(),
        outcome,
        domain,
    })
}
