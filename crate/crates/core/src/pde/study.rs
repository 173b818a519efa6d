use std::io::{self, Write};

use crate::approx::{ApproxEngine, Basis, DenseSolverKind, MonomialBasis, Operator, Rbf, ScaleRule, WeightFunction};
use crate::geometry::KdTree;
use crate::Point;

use super::steady::{run_manufactured_poisson, ManufacturedPoisson, TimingBreakdown};
use super::PdeError;

/// Error and median stage timings at one resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub nodes: usize,
    pub h: f64,
    pub e_inf: f64,
    pub timings: TimingBreakdown,
    /// Sample standard deviation of each stage over the repetitions.
    pub timings_std: TimingBreakdown,
}

pub const RECORDS_CSV_HEADER: &str = "N,h,e_inf,t_domain,t_stencil,t_weights,t_assembly,t_precond,t_solve,t_error";

/// Least squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64, PdeError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(PdeError::TooFewResolutions(x.len().min(y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(PdeError::InvalidParameter("all resolutions are equal".into()));
    }
    Ok(sxy / sxx)
}

/// Observed order `q` in `e ~ (N^{1/d})^{-q}`.
pub fn fit_order(nodes: &[usize], errors: &[f64], dim: usize) -> Result<f64, PdeError> {
    let x: Vec<f64> = nodes.iter().map(|&n| (n as f64).ln() / dim as f64).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(-fit_slope(&x, &y)?)
}

/// Observed order `q` in `e ~ h^q`.
pub fn fit_order_h(h: &[f64], errors: &[f64]) -> Result<f64, PdeError> {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    fit_slope(&x, &y)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Solves `cases` (ordered by refinement) `repetitions` times each and records
/// the error and the median time of every stage.
pub fn convergence_study<const D: usize>(
    cases: &[ManufacturedPoisson<D>],
    repetitions: usize,
) -> Result<Vec<ConvergenceRecord>, PdeError> {
    if cases.len() < 2 {
        return Err(PdeError::TooFewResolutions(cases.len()));
    }
    let reps = repetitions.max(1);
    let mut records: Vec<ConvergenceRecord> = Vec::with_capacity(cases.len());
    for case in cases {
        let mut samples: Vec<[f64; 7]> = Vec::with_capacity(reps);
        let mut first = None;
        for _ in 0..reps {
            let run = run_manufactured_poisson(case)?;
            samples.push(run.timings.as_array());
            first.get_or_insert((run.nodes, run.e_inf));
        }
        let (nodes, e_inf) = first.expect("at least one repetition");
        if let Some(prev) = records.last() {
            if nodes <= prev.nodes {
                return Err(PdeError::InvalidParameter(format!(
                    "resolutions must have increasing node counts, got {} after {}",
                    nodes, prev.nodes
                )));
            }
        }
        let mut med = [0.0; 7];
        let mut sd = [0.0; 7];
        for s in 0..7 {
            let mut col: Vec<f64> = samples.iter().map(|t| t[s]).collect();
            sd[s] = std_dev(&col);
            med[s] = median(&mut col);
        }
        records.push(ConvergenceRecord {
            nodes,
            h: case.h,
            e_inf,
            timings: TimingBreakdown::from_array(med),
            timings_std: TimingBreakdown::from_array(sd),
        });
    }
    Ok(records)
}

/// Writes records as `N,h,e_inf,t_domain,...,t_error`.
pub fn write_records_csv<W: Write>(records: &[ConvergenceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{RECORDS_CSV_HEADER}")?;
    for r in records {
        write!(out, "{},{:.16e},{:.16e}", r.nodes, r.h, r.e_inf)?;
        for t in r.timings.as_array() {
            write!(out, ",{t:.6e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes only the deterministic columns `N,h,e_inf`.
pub fn write_errors_csv<W: Write>(records: &[ConvergenceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "N,h,e_inf")?;
    for r in records {
        writeln!(out, "{},{:.16e},{:.16e}", r.nodes, r.h, r.e_inf)?;
    }
    Ok(())
}

/// One engine configuration of the approximation study.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxSetup {
    pub id: usize,
    pub engine: ApproxEngine,
    pub stencil_size: usize,
}

/// The five reference configurations:
/// 1. RBF-FD, Gaussian `sigma = 100`, no augmentation, nearest-neighbour scaling, LU, `n = 9`;
/// 2. RBF-FD, Gaussian `sigma = 5`, unscaled, LU, `n = 9`;
/// 3. as 2 with SVD;
/// 4. weighted least squares on `{1, x, y, x^2, y^2}`, Gaussian weight `sigma = 1`,
///    nearest-neighbour scaling, SVD, `n = 9`;
/// 5. RBF-FD, `r^5` with quadratic augmentation, `n = 12`.
pub fn reference_setups() -> Vec<ApproxSetup> {
    vec![
        ApproxSetup {
            id: 1,
            engine: ApproxEngine::rbffd(Rbf::Gaussian(100.0), -1)
                .with_scale(ScaleRule::NearestNeighbor)
                .with_solver(DenseSolverKind::PartialPivLu),
            stencil_size: 9,
        },
        ApproxSetup {
            id: 2,
            engine: ApproxEngine::rbffd(Rbf::Gaussian(5.0), -1)
                .with_scale(ScaleRule::None)
                .with_solver(DenseSolverKind::PartialPivLu),
            stencil_size: 9,
        },
        ApproxSetup {
            id: 3,
            engine: ApproxEngine::rbffd(Rbf::Gaussian(5.0), -1)
                .with_scale(ScaleRule::None)
                .with_solver(DenseSolverKind::Svd),
            stencil_size: 9,
        },
        ApproxSetup {
            id: 4,
            engine: ApproxEngine::gwls(
                Basis::Monomials(MonomialBasis::PurePowers(2)),
                WeightFunction::Gaussian(1.0),
            )
            .with_scale(ScaleRule::NearestNeighbor)
            .with_solver(DenseSolverKind::Svd),
            stencil_size: 9,
        },
        ApproxSetup {
            id: 5,
            engine: ApproxEngine::rbffd(Rbf::Polyharmonic(5), 2),
            stencil_size: 12,
        },
    ]
}

/// Grid resolutions `1/10 ... 1/160`, refined by `sqrt 2`.
pub const GRID_DIVISIONS: [usize; 9] = [10, 14, 20, 28, 40, 57, 80, 113, 160];

/// Extra grid layers around the unit square from which stencils may draw, so
/// that every evaluation node has a full symmetric neighbourhood.
const GRID_PADDING: i64 = 3;

fn test_function(p: &Point<2>) -> f64 {
    let pi = std::f64::consts::PI;
    (pi * p[0]).sin() * (pi * p[1]).sin()
}

fn test_laplacian(p: &Point<2>) -> f64 {
    -2.0 * std::f64::consts::PI.powi(2) * test_function(p)
}

/// `e_h = max |w^T u - lap u|` over the `(k + 1)^2` nodes of the grid with
/// spacing `h = 1 / k` on the unit square, for `u = sin(pi x) sin(pi y)`.
pub fn grid_laplacian_error(setup: &ApproxSetup, divisions: usize) -> Result<(f64, f64), PdeError> {
    if divisions == 0 {
        return Err(PdeError::InvalidParameter("grid needs at least one division".into()));
    }
    let h = 1.0 / divisions as f64;
    let k = divisions as i64;
    let mut cloud = Vec::new();
    let mut targets = Vec::new();
    for i in -GRID_PADDING..=k + GRID_PADDING {
        for j in -GRID_PADDING..=k + GRID_PADDING {
            if (0..=k).contains(&i) && (0..=k).contains(&j) {
                targets.push(cloud.len());
            }
            cloud.push(Point::<2>::new(i as f64 * h, j as f64 * h));
        }
    }
    let tree = KdTree::new(&cloud);
    let values: Vec<f64> = cloud.iter().map(test_function).collect();
    let mut e_h: f64 = 0.0;
    for &t in &targets {
        let stencil = tree.knn(&cloud[t], setup.stencil_size);
        let points: Vec<Point<2>> = stencil.iter().map(|&(j, _)| cloud[j]).collect();
        let w = setup
            .engine
            .weights(&points, &cloud[t], &Operator::Laplacian)
            .map_err(|source| PdeError::Approx { node: t, source })?;
        let approx: f64 = w.iter().zip(&stencil).map(|(w, &(j, _))| w * values[j]).sum();
        let err = (approx - test_laplacian(&cloud[t])).abs();
        // a NaN error must not be hidden by max
        e_h = if err.is_nan() { f64::NAN } else { e_h.max(err) };
    }
    Ok((h, e_h))
}

/// Runs [`grid_laplacian_error`] for every setup and resolution, returning
/// `(setup, h, e_h)` rows.
pub fn approximation_study(setups: &[ApproxSetup], divisions: &[usize]) -> Result<Vec<(usize, f64, f64)>, PdeError> {
    let mut rows = Vec::new();
    for s in setups {
        for &k in divisions {
            let (h, e) = grid_laplacian_error(s, k)?;
            rows.push((s.id, h, e));
        }
    }
    Ok(rows)
}
