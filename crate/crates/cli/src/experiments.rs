//! The reproduction experiments. Each one resolves its defaults into a full
//! [`RunConfig`], runs, and writes CSV files into an output directory.

use std::fmt::Display;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use meshless::approx::{ApproxEngine, DenseSolverKind, ScaleRule};
use meshless::geometry::{
    discretize_boundary, fill_interior, find_closest_stencils, find_closest_stencils_from, DomainDiscretization,
    NodeFilter, Shape, Spacing,
};
use meshless::io::{write_field_csv, write_nodes_csv};
use meshless::operators::{compute_shapes, Family, ShapeRequest};
use meshless::pde::{
    approximation_study, assemble_steady, convergence_study, fit_order, fit_order_h, reference_setups,
    run_heat_explicit, sine_product, sine_product_forcing, solve_sparse, solve_steady, stable_time_step,
    write_errors_csv, write_records_csv, ConvergenceRecord, HeatProblem, ManufacturedPoisson, PreconditionerKind,
    SolveOutcome, SparseSolverConfig, SteadyProblem, GRID_DIVISIONS,
};
use meshless::Point;
use thiserror::Error;

use crate::config::{
    ConfigError, EngineConfig, Experiment, OneOrMany, PreconditionerName, RunConfig, ScaleKind, SolverKind,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage}: {message}")]
    Numerical { stage: &'static str, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } | RunError::Io { .. } => 1,
        }
    }
}

fn stage<E: Display>(stage: &'static str) -> impl FnOnce(E) -> RunError {
    move |e| RunError::Numerical {
        stage,
        message: e.to_string(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// What a run produced: files relative to the output directory and a short
/// human-readable report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<String>,
    pub report: Vec<String>,
}

fn engine_defaults(spec: &str) -> EngineConfig {
    EngineConfig::parse_spec(spec).expect("built-in engine spec")
}

/// Fills in every default the experiment will use, so that the result
/// describes the run completely.
pub fn resolve(config: &RunConfig) -> Result<RunConfig, ConfigError> {
    config.validate()?;
    let mut c = config.clone();
    c.out = None;
    let g = &mut c.geometry;
    let r = &mut c.run;
    let engine_default = match (c.experiment, c.dim) {
        (Experiment::Heat2d, _) => Some("rbffd phs k=3 m=2 n=12"),
        (Experiment::Convdiff3d, _) => Some("rbffd phs k=3 m=2 n=35"),
        (Experiment::PoissonBench, 2) => Some("rbffd phs k=3 m=2 n=9"),
        (Experiment::PoissonBench, _) => Some("rbffd phs k=3 m=2 n=35"),
        _ => None,
    };
    match c.experiment {
        Experiment::ApproxConvergence => {
            r.divisions.get_or_insert_with(|| GRID_DIVISIONS.to_vec());
            r.setups.get_or_insert_with(|| (1..=5).collect());
        }
        Experiment::Heat2d => {
            g.h.get_or_insert(OneOrMany::One(0.02));
            g.hole_radius.get_or_insert(0.25);
            r.dt_factor.get_or_insert(0.5);
            r.end_time.get_or_insert(1.0);
        }
        Experiment::Convdiff3d => {
            g.h.get_or_insert(OneOrMany::One(0.05));
            g.hole_radius.get_or_insert(0.25);
        }
        Experiment::PoissonBench => {
            let h = if c.dim == 2 {
                vec![0.08, 0.04, 0.02, 0.01]
            } else {
                vec![0.2, 0.14, 0.1, 0.07, 0.05]
            };
            g.h.get_or_insert(OneOrMany::Many(h));
            g.inner_radius.get_or_insert(0.5);
            g.outer_radius.get_or_insert(1.0);
            r.repetitions.get_or_insert(9);
        }
        Experiment::FillDemo => {
            g.h.get_or_insert(OneOrMany::One(if c.dim == 2 { 0.02 } else { 0.05 }));
            g.h_gradient.get_or_insert(1.0);
            g.inner_radius.get_or_insert(0.5);
            g.outer_radius.get_or_insert(1.0);
        }
    }
    if let Some(spec) = engine_default {
        c.engine = config.engine_config(&engine_defaults(spec))?;
        // checks that the combination is complete and valid
        let (engine, _) = c.engine.build()?;
        let (scale, solver) = match &engine {
            ApproxEngine::Gwls { scale, solver, .. } | ApproxEngine::RbfFd { scale, solver, .. } => (*scale, *solver),
        };
        c.engine.scale.get_or_insert(match scale {
            ScaleRule::SupportRadius => ScaleKind::Support,
            ScaleRule::NearestNeighbor => ScaleKind::Nearest,
            ScaleRule::None => ScaleKind::None,
        });
        c.engine.solver.get_or_insert(match solver {
            DenseSolverKind::PartialPivLu => SolverKind::Lu,
            DenseSolverKind::ColPivQr => SolverKind::Qr,
            DenseSolverKind::Svd => SolverKind::Svd,
        });
        let s = c.solver.build()?;
        let max_iter = s.max_iter;
        c.solver.tol = Some(s.tol);
        c.solver.max_iter = max_iter;
        if let PreconditionerKind::Ilut { fill, drop } = s.preconditioner {
            c.solver.preconditioner = Some(PreconditionerName::Ilut);
            c.solver.fill = Some(fill);
            c.solver.drop = Some(drop);
        } else {
            c.solver.preconditioner = Some(PreconditionerName::None);
        }
    }
    c.validate()?;
    Ok(c)
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::Invalid {
            key: key.into(),
            message: format!("must be positive, got {x}"),
        })
    }
}

fn single_h(c: &RunConfig) -> Result<f64, ConfigError> {
    match c.geometry.h.as_ref().map(OneOrMany::values).as_deref() {
        Some([h]) => positive("geometry.h", *h),
        _ => Err(ConfigError::Invalid {
            key: "geometry.h".into(),
            message: format!("{} takes a single spacing", c.experiment),
        }),
    }
}

/// Runs a resolved configuration, writing into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    std::fs::create_dir_all(out).map_err(io_at(out))?;
    match (config.experiment, config.dim) {
        (Experiment::ApproxConvergence, _) => approx_convergence(config, out),
        (Experiment::Heat2d, _) => heat2d(config, out),
        (Experiment::Convdiff3d, _) => convdiff3d(config, out),
        (Experiment::PoissonBench, 2) => poisson_bench::<2>(config, out),
        (Experiment::PoissonBench, _) => poisson_bench::<3>(config, out),
        (Experiment::FillDemo, 2) => fill_demo::<2>(config, out),
        (Experiment::FillDemo, _) => fill_demo::<3>(config, out),
    }
}

fn approx_convergence(c: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let divisions = c.run.divisions.clone().unwrap_or_default();
    let wanted = c.run.setups.clone().unwrap_or_default();
    let setups: Vec<_> = reference_setups()
        .into_iter()
        .filter(|s| wanted.contains(&s.id))
        .collect();
    if setups.len() != wanted.len() {
        return Err(ConfigError::Invalid {
            key: "run.setups".into(),
            message: "setups are numbered 1 to 5".into(),
        }
        .into());
    }
    if divisions.is_empty() || divisions.contains(&0) {
        return Err(ConfigError::Invalid {
            key: "run.divisions".into(),
            message: "need at least one positive division count".into(),
        }
        .into());
    }
    let rows = approximation_study(&setups, &divisions).map_err(stage("approximation study"))?;
    let name = "approx_convergence.csv";
    let path = out.join(name);
    let mut f = create(&path)?;
    let write = |f: &mut BufWriter<File>| -> std::io::Result<()> {
        use std::io::Write;
        writeln!(f, "setup,h,e_h")?;
        for (s, h, e) in &rows {
            writeln!(f, "{s},{h:.16e},{e:.16e}")?;
        }
        f.flush()
    };
    write(&mut f).map_err(io_at(&path))?;
    let mut report = Vec::new();
    for s in &setups {
        let (h, e): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.0 == s.id).map(|r| (r.1, r.2)).unzip();
        let min = e.iter().cloned().fold(f64::INFINITY, f64::min);
        let order = fit_order_h(&h, &e)
            .map(|q| format!("{q:.3}"))
            .unwrap_or_else(|_| "n/a".into());
        report.push(format!(
            "setup {}: observed order {order}, smallest error {min:.3e}",
            s.id
        ));
    }
    Ok(Outcome {
        files: vec![name.into()],
        report,
    })
}

/// Unit square minus a disk of radius `hole_radius` at its center. The outer
/// boundary has type -1, the circle type [`HEAT_HOLE_TYPE`].
pub fn heat_shape(hole_radius: f64) -> Result<Shape<2>, RunError> {
    let hole = Shape::ball(Point::<2>::new(0.5, 0.5), hole_radius)
        .and_then(|s| s.with_boundary_type(HEAT_HOLE_TYPE))
        .map_err(stage("geometry"))?;
    Ok(Shape::cuboid(Point::<2>::zeros(), Point::<2>::new(1.0, 1.0))
        .map_err(stage("geometry"))?
        .difference(hole))
}

pub const HEAT_HOLE_TYPE: i32 = -2;

/// The explicit heat run and the implicit steady solve of the same problem.
#[derive(Debug)]
pub struct HeatComparison {
    pub domain: DomainDiscretization<2>,
    pub explicit: Vec<f64>,
    pub implicit: SolveOutcome,
    pub dt: f64,
    pub steps: usize,
    /// Largest change of the field over the last step, divided by `dt`.
    pub last_rate: f64,
    pub e_inf: f64,
}

/// `du/dt = lap u + 5`, `u = 0` at `t = 0`, `u = x` on the outer boundary and
/// `du/dn = 0` on the circle, run explicitly to `end_time` and compared with
/// the solution of `-lap u = 5` under the same boundary conditions.
///
/// Stencils of the circle nodes are taken from interior nodes only.
#[allow(clippy::too_many_arguments)]
pub fn heat_comparison(
    h: f64,
    hole_radius: f64,
    seed: u64,
    engine: &ApproxEngine,
    stencil_size: usize,
    dt_factor: f64,
    end_time: f64,
    solver: &SparseSolverConfig,
) -> Result<HeatComparison, RunError> {
    let shape = heat_shape(hole_radius)?;
    let sp = Spacing::constant(h);
    let mut d = discretize_boundary(&shape, &sp, seed).map_err(stage("boundary discretization"))?;
    fill_interior(&mut d, &shape, &sp, seed.wrapping_add(1)).map_err(stage("interior fill"))?;
    find_closest_stencils(&mut d, stencil_size, &NodeFilter::All, &NodeFilter::All).map_err(stage("stencils"))?;
    find_closest_stencils_from(
        &mut d,
        stencil_size,
        &NodeFilter::Type(HEAT_HOLE_TYPE),
        &NodeFilter::Interior,
    )
    .map_err(stage("stencils"))?;
    let storage = compute_shapes(
        &d,
        engine,
        &ShapeRequest::new().laplacian().first_derivatives(),
        &NodeFilter::All,
    )
    .map_err(stage("weights"))?;

    let dt = dt_factor * stable_time_step(&d);
    let steps = (end_time / dt).ceil() as usize;
    let zero = |_: &Point<2>| 0.0;
    let five = |_: &Point<2>, _: f64| 5.0;
    let x = |p: &Point<2>, _: f64| p[0];
    let zero_t = |_: &Point<2>, _: f64| 0.0;
    let problem = HeatProblem {
        dt,
        steps,
        initial: &zero,
        source: &five,
        dirichlet: &x,
        neumann: &zero_t,
        neumann_types: &[HEAT_HOLE_TYPE],
        snapshot_every: 0,
    };
    let explicit = run_heat_explicit(&d, &storage, &problem).map_err(stage("explicit time stepping"))?;

    let five = |_: &Point<2>| 5.0;
    let x = |p: &Point<2>| p[0];
    let steady = SteadyProblem {
        terms: vec![(-1.0, Family::Laplacian)],
        rhs: &five,
        dirichlet: &x,
        neumann: &zero,
        neumann_types: &[HEAT_HOLE_TYPE],
    };
    let implicit = solve_steady(&d, &storage, &steady, solver).map_err(stage("steady solve"))?;
    let e_inf = explicit
        .field
        .iter()
        .zip(&implicit.solution)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(HeatComparison {
        domain: d,
        explicit: explicit.field,
        implicit,
        dt,
        steps,
        last_rate: explicit.last_change / dt,
        e_inf,
    })
}

fn heat2d(c: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let h = single_h(c)?;
    let hole = positive("geometry.hole_radius", c.geometry.hole_radius.unwrap_or_default())?;
    if hole >= 0.5 {
        return Err(ConfigError::Invalid {
            key: "geometry.hole_radius".into(),
            message: "the hole must fit inside the unit square".into(),
        }
        .into());
    }
    let (engine, n) = c.engine.build()?;
    let solver = c.solver.build()?;
    let dt_factor = positive("run.dt_factor", c.run.dt_factor.unwrap_or_default())?;
    let end_time = positive("run.end_time", c.run.end_time.unwrap_or_default())?;
    let r = heat_comparison(h, hole, c.seed, &engine, n, dt_factor, end_time, &solver)?;
    let files = ["heat2d_nodes.csv", "heat2d_explicit.csv", "heat2d_implicit.csv"];
    write_nodes_csv(&r.domain, &out.join(files[0])).map_err(stage("output"))?;
    write_field_csv(&r.domain, &r.explicit[..], &out.join(files[1])).map_err(stage("output"))?;
    write_field_csv(&r.domain, &r.implicit.solution[..], &out.join(files[2])).map_err(stage("output"))?;
    Ok(Outcome {
        files: vec![
            files[0].into(),
            "heat2d_nodes.normals.csv".into(),
            files[1].into(),
            files[2].into(),
        ],
        report: vec![
            format!("N = {}, dt = {:.4e}, {} steps", r.domain.size(), r.dt, r.steps),
            format!("last step change / dt = {:.3e}", r.last_rate),
            format!(
                "implicit solve: {} iterations, residual {:.3e}",
                r.implicit.iterations, r.implicit.residual
            ),
            format!("max |explicit - implicit| = {:.3e}", r.e_inf),
        ],
    })
}

/// Solution of `-2 lap u + 8 (2, 1, -1) . grad u = 1`, `u = 0` on the boundary.
#[derive(Debug)]
pub struct ConvDiff {
    pub domain: DomainDiscretization<3>,
    pub outcome: SolveOutcome,
    /// `||M u - r|| / ||r||` of the assembled system.
    pub residual: f64,
    pub tol: f64,
}

/// Unit cube minus a ball of radius `hole_radius` at its center.
pub fn convdiff_shape(hole_radius: f64) -> Result<Shape<3>, RunError> {
    let ball = Shape::ball(Point::<3>::repeat(0.5), hole_radius).map_err(stage("geometry"))?;
    Ok(Shape::cuboid(Point::<3>::zeros(), Point::<3>::repeat(1.0))
        .map_err(stage("geometry"))?
        .difference(ball))
}

pub fn convection_diffusion(
    h: f64,
    hole_radius: f64,
    seed: u64,
    engine: &ApproxEngine,
    stencil_size: usize,
    solver: &SparseSolverConfig,
) -> Result<ConvDiff, RunError> {
    let shape = convdiff_shape(hole_radius)?;
    let sp = Spacing::constant(h);
    let mut d = discretize_boundary(&shape, &sp, seed).map_err(stage("boundary discretization"))?;
    fill_interior(&mut d, &shape, &sp, seed.wrapping_add(1)).map_err(stage("interior fill"))?;
    find_closest_stencils(&mut d, stencil_size, &NodeFilter::Interior, &NodeFilter::All).map_err(stage("stencils"))?;
    let storage = compute_shapes(
        &d,
        engine,
        &ShapeRequest::new().laplacian().first_derivatives(),
        &NodeFilter::Interior,
    )
    .map_err(stage("weights"))?;
    let one = |_: &Point<3>| 1.0;
    let zero = |_: &Point<3>| 0.0;
    let problem = SteadyProblem {
        terms: vec![
            (-2.0, Family::Laplacian),
            (16.0, Family::D1(0)),
            (8.0, Family::D1(1)),
            (-8.0, Family::D1(2)),
        ],
        rhs: &one,
        dirichlet: &zero,
        neumann: &zero,
        neumann_types: &[],
    };
    let (m, r) = assemble_steady(&d, &storage, &problem)
        .and_then(|s| s.finalize().map_err(Into::into))
        .map_err(stage("assembly"))?;
    let outcome = solve_sparse(&m, &r, solver).map_err(stage("solve"))?;
    if !outcome.converged {
        return Err(RunError::Numerical {
            stage: "solve",
            message: format!(
                "BiCGStab stopped after {} iterations at relative residual {:.3e}",
                outcome.iterations, outcome.residual
            ),
        });
    }
    let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual = m.residual_norm(&outcome.solution, &r) / rnorm;
    Ok(ConvDiff {
        domain: d,
        outcome,
        residual,
        tol: solver.tol,
    })
}

fn convdiff3d(c: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let h = single_h(c)?;
    let hole = positive("geometry.hole_radius", c.geometry.hole_radius.unwrap_or_default())?;
    if hole >= 0.5 {
        return Err(ConfigError::Invalid {
            key: "geometry.hole_radius".into(),
            message: "the hole must fit inside the unit cube".into(),
        }
        .into());
    }
    let (engine, n) = c.engine.build()?;
    let solver = c.solver.build()?;
    let r = convection_diffusion(h, hole, c.seed, &engine, n, &solver)?;
    let name = "convdiff3d_field.csv";
    write_field_csv(&r.domain, &r.outcome.solution[..], &out.join(name)).map_err(stage("output"))?;
    let negative = r.outcome.solution.iter().filter(|u| **u < 0.0).count();
    Ok(Outcome {
        files: vec![name.into()],
        report: vec![
            format!("N = {}, {} iterations", r.domain.size(), r.outcome.iterations),
            format!("relative residual {:.3e} (tolerance {:.1e})", r.residual, r.tol),
            format!(
                "max u = {:.4e}, {negative} negative values",
                r.outcome.solution.iter().cloned().fold(f64::MIN, f64::max)
            ),
        ],
    })
}

/// `B(0, outer) \ B(0, inner)`.
pub fn annulus<const D: usize>(inner: f64, outer: f64) -> Result<Shape<D>, RunError> {
    if !(inner < outer) {
        return Err(ConfigError::Invalid {
            key: "geometry.inner_radius".into(),
            message: format!("must be smaller than outer_radius ({inner} >= {outer})"),
        }
        .into());
    }
    let big = Shape::ball(Point::<D>::zeros(), outer).map_err(stage("geometry"))?;
    let small = Shape::ball(Point::<D>::zeros(), inner).map_err(stage("geometry"))?;
    Ok(big.difference(small))
}

/// Manufactured Poisson cases `-lap u = f`, `u = prod sin(pi x_i)`, on the annulus
/// (2D) or spherical shell (3D), one per spacing.
pub fn poisson_cases<const D: usize>(
    hs: &[f64],
    inner: f64,
    outer: f64,
    seed: u64,
    engine: &ApproxEngine,
    stencil_size: usize,
    solver: &SparseSolverConfig,
) -> Result<Vec<ManufacturedPoisson<D>>, RunError> {
    let shape = annulus::<D>(inner, outer)?;
    Ok(hs
        .iter()
        .map(|&h| ManufacturedPoisson {
            shape: shape.clone(),
            h,
            seed,
            stencil_size,
            engine: engine.clone(),
            solver: *solver,
            exact: sine_product::<D>,
            forcing: sine_product_forcing::<D>,
        })
        .collect())
}

fn poisson_bench<const D: usize>(c: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let hs = c.geometry.h.as_ref().map(OneOrMany::values).unwrap_or_default();
    for h in &hs {
        positive("geometry.h", *h)?;
    }
    if hs.len() < 2 {
        return Err(ConfigError::Invalid {
            key: "geometry.h".into(),
            message: "poisson-bench needs at least two spacings".into(),
        }
        .into());
    }
    let (engine, n) = c.engine.build()?;
    let solver = c.solver.build()?;
    let g = &c.geometry;
    let cases = poisson_cases::<D>(
        &hs,
        g.inner_radius.unwrap_or_default(),
        g.outer_radius.unwrap_or_default(),
        c.seed,
        &engine,
        n,
        &solver,
    )?;
    let reps = c.run.repetitions.unwrap_or(1);
    let records = convergence_study(&cases, reps).map_err(stage("convergence study"))?;
    write_records(&records, out)?;
    let nodes: Vec<usize> = records.iter().map(|r| r.nodes).collect();
    let errors: Vec<f64> = records.iter().map(|r| r.e_inf).collect();
    let order = fit_order(&nodes, &errors, D).map_err(stage("order fit"))?;
    let mut report: Vec<String> = records
        .iter()
        .map(|r| {
            format!(
                "N = {:>7}, e_inf = {:.3e}, total {:.3} s",
                r.nodes,
                r.e_inf,
                r.timings.total()
            )
        })
        .collect();
    report.push(format!("observed order {order:.3} (expected 2)"));
    Ok(Outcome {
        files: vec!["records.csv".into(), "errors.csv".into()],
        report,
    })
}

fn write_records(records: &[ConvergenceRecord], out: &Path) -> Result<(), RunError> {
    let path = out.join("records.csv");
    write_records_csv(records, create(&path)?).map_err(io_at(&path))?;
    let path = out.join("errors.csv");
    write_errors_csv(records, create(&path)?).map_err(io_at(&path))
}

fn fill_demo<const D: usize>(c: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let h = single_h(c)?;
    let gradient = c.geometry.h_gradient.unwrap_or_default();
    if !(gradient >= 0.0 && gradient.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "geometry.h_gradient".into(),
            message: format!("must be nonnegative, got {gradient}"),
        }
        .into());
    }
    let shape = annulus::<D>(
        c.geometry.inner_radius.unwrap_or_default(),
        c.geometry.outer_radius.unwrap_or_default(),
    )?;
    let sp = Spacing::new(move |p: &Point<D>| h * (1.0 + gradient * p.norm()));
    let mut d = discretize_boundary(&shape, &sp, c.seed).map_err(stage("boundary discretization"))?;
    fill_interior(&mut d, &shape, &sp, c.seed.wrapping_add(1)).map_err(stage("interior fill"))?;
    let name = "fill_nodes.csv";
    write_nodes_csv(&d, &out.join(name)).map_err(stage("output"))?;
    Ok(Outcome {
        files: vec![name.into(), "fill_nodes.normals.csv".into()],
        report: vec![format!(
            "{} nodes ({} on the boundary), minimal separation {:.4e}",
            d.size(),
            d.boundary().len(),
            d.min_separation()
        )],
    })
}
