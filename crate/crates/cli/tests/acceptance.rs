//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Failures are reported, not fatal; set `ACCEPTANCE_STRICT=1` to make any
//! failure exit nonzero.

use std::collections::BTreeMap;
use std::error::Error;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use meshless::approx::{monomial_derivative, ApproxEngine, Basis, MonomialBasis, Operator, Rbf, WeightFunction};
use meshless::geometry::{
    discretize_boundary, fill_interior, find_closest_stencils, DomainDiscretization, NodeFilter, Shape, Spacing,
    MIN_DISTANCE_FACTOR,
};
use meshless::operators::{compute_shapes, compute_shapes_with_threads, Family, ShapeRequest, SparseSystem};
use meshless::pde::{
    approximation_study, assemble_steady, fit_order, fit_order_h, reference_setups, run_manufactured_poisson,
    solve_sparse, PoissonRun, SparseSolverConfig, SteadyProblem, GRID_DIVISIONS,
};
use meshless::Point;
use meshless_cli::experiments::{heat_comparison, poisson_cases};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Res<T> = Result<T, Box<dyn Error>>;

/// Outcome of one criterion: pass flag and the measured values.
struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Res<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// 1 ------------------------------------------------------------------------

/// Weights of the 5-point cross from the square moment system
/// `sum_j w_j q_k(x_j) = lap q_k(0)`, solved directly.
fn cross_oracle(h: f64) -> Vec<f64> {
    let pts = [(0.0, 0.0), (h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)];
    // basis 1, x, y, x^2, y^2
    let q = |x: f64, y: f64| [1.0, x, y, x * x, y * y];
    let a = DMatrix::from_fn(5, 5, |k, j| q(pts[j].0, pts[j].1)[k]);
    let b = DVector::from_vec(vec![0.0, 0.0, 0.0, 2.0, 2.0]);
    a.lu()
        .solve(&b)
        .expect("cross moment matrix is regular")
        .iter()
        .copied()
        .collect()
}

fn classical_stencil() -> Res<Verdict> {
    let engine = ApproxEngine::gwls(
        Basis::Monomials(MonomialBasis::PurePowers(2)),
        WeightFunction::ConstantOne,
    );
    let mut worst: f64 = 0.0;
    for h in [1.0, 0.1, 0.01] {
        let pts = [
            Point::<2>::new(0.0, 0.0),
            Point::<2>::new(h, 0.0),
            Point::<2>::new(-h, 0.0),
            Point::<2>::new(0.0, h),
            Point::<2>::new(0.0, -h),
        ];
        let w = engine.weights(&pts, &pts[0], &Operator::Laplacian)?;
        let oracle = cross_oracle(h);
        let classical = [
            -4.0 / (h * h),
            1.0 / (h * h),
            1.0 / (h * h),
            1.0 / (h * h),
            1.0 / (h * h),
        ];
        let scale = 4.0 / (h * h);
        worst = worst
            .max(max_diff(&w, &oracle) / scale)
            .max(max_diff(&w, &classical) / scale);
    }
    verdict(worst <= 1e-9, format!("max relative deviation {worst:.2e}"))
}

// 2 ------------------------------------------------------------------------

fn random_stencil<const D: usize>(rng: &mut ChaCha8Rng, n: usize) -> (Point<D>, Vec<Point<D>>) {
    let center = Point::<D>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let mut pts = vec![center];
    while pts.len() < n {
        let q = Point::<D>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        if q.norm() <= 1.0 && pts.iter().all(|r| (r - (center + q)).norm() >= 0.05) {
            pts.push(center + q);
        }
    }
    (center, pts)
}

/// Operators of order <= 2 with the multi-indices they are made of.
/// An operator with the `(coefficient, multi-index)` terms it is built from.
type Decomposed<const D: usize> = (Operator<D>, Vec<(f64, [u32; D])>);

fn operators<const D: usize>() -> Vec<Decomposed<D>> {
    let unit = |a: usize| {
        let mut e = [0u32; D];
        e[a] = 1;
        e
    };
    let mut ops = vec![
        (Operator::Identity, vec![(1.0, [0; D])]),
        (
            Operator::Laplacian,
            (0..D).map(|a| (1.0, unit(a).map(|x| 2 * x))).collect(),
        ),
    ];
    for a in 0..D {
        ops.push((Operator::Derivative(a), vec![(1.0, unit(a))]));
        for b in a..D {
            let mut e = unit(a);
            e[b] += 1;
            ops.push((Operator::SecondDerivative(a, b), vec![(1.0, e)]));
        }
    }
    ops
}

fn exactness_defect<const D: usize>(seed: u64, count: usize) -> Res<f64> {
    let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(5), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (c, pts) = random_stencil::<D>(&mut rng, 12);
        for (op, terms) in operators::<D>() {
            let w = engine.weights(&pts, &c, &op)?;
            for q in MonomialBasis::TotalDegree(2).exponents::<D>() {
                let approx: f64 = w
                    .iter()
                    .zip(&pts)
                    .map(|(w, p)| w * monomial_derivative(&q, &[0; D], p))
                    .sum();
                let exact: f64 = terms
                    .iter()
                    .map(|(k, alpha)| k * monomial_derivative(&q, alpha, &c))
                    .sum();
                worst = worst.max((approx - exact).abs());
            }
        }
    }
    Ok(worst)
}

fn monomial_exactness() -> Res<Verdict> {
    let e2 = exactness_defect::<2>(2, 100)?;
    let e3 = exactness_defect::<3>(3, 100)?;
    verdict(e2.max(e3) <= 1e-8, format!("max defect 2D {e2:.2e}, 3D {e3:.2e}"))
}

// 3 ------------------------------------------------------------------------

fn approximation_orders() -> Res<Verdict> {
    let rows = approximation_study(&reference_setups(), &GRID_DIVISIONS)?;
    let series = |id: usize| -> (Vec<f64>, Vec<f64>) { rows.iter().filter(|r| r.0 == id).map(|r| (r.1, r.2)).unzip() };
    let (h4, e4) = series(4);
    let (h5, e5) = series(5);
    let (_, e1) = series(1);
    let q4 = fit_order_h(&h4, &e4)?;
    let q5 = fit_order_h(&h5, &e5)?;
    let monotone = e5.windows(2).all(|w| w[1] < w[0]);
    let floor = e1.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = (1.6..=2.4).contains(&q4) && q5 >= 1.5 && monotone && floor >= 1e-6;
    verdict(
        pass,
        format!("setup 4 order {q4:.3}, setup 5 order {q5:.3} (monotone {monotone}), setup 1 floor {floor:.2e}"),
    )
}

// 4 ------------------------------------------------------------------------

struct PoissonStudy {
    largest_2d: PoissonRun<2>,
    largest_3d: PoissonRun<3>,
}

fn poisson_study<const D: usize>(hs: &[f64], n: usize) -> Res<(f64, Vec<PoissonRun<D>>)> {
    let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 2);
    let cases = poisson_cases::<D>(hs, 0.5, 1.0, 1, &engine, n, &SparseSolverConfig::default())?;
    let runs = cases
        .iter()
        .map(run_manufactured_poisson)
        .collect::<Result<Vec<_>, _>>()?;
    let nodes: Vec<usize> = runs.iter().map(|r| r.nodes).collect();
    let errors: Vec<f64> = runs.iter().map(|r| r.e_inf).collect();
    Ok((fit_order(&nodes, &errors, D)?, runs))
}

fn poisson_orders(keep: &mut Option<PoissonStudy>) -> Res<Verdict> {
    let (q2, mut r2) = poisson_study::<2>(&[0.08, 0.04, 0.02, 0.01], 9)?;
    let (q3, mut r3) = poisson_study::<3>(&[0.2, 0.14, 0.1, 0.07, 0.05], 35)?;
    let (n2, n3) = (r2.last().map_or(0, |r| r.nodes), r3.last().map_or(0, |r| r.nodes));
    let pass = (1.5..=2.5).contains(&q2) && (1.4..=2.6).contains(&q3);
    *keep = Some(PoissonStudy {
        largest_2d: r2.pop().ok_or("no 2D runs")?,
        largest_3d: r3.pop().ok_or("no 3D runs")?,
    });
    verdict(
        pass,
        format!("2D order {q2:.3} (N up to {n2}), 3D order {q3:.3} (N up to {n3})"),
    )
}

// 5 ------------------------------------------------------------------------

fn disk_domain(h: f64, n: usize, seed: u64) -> Res<DomainDiscretization<2>> {
    let shape = Shape::ball(Point::<2>::new(0.5, 0.5), 0.5)?;
    let sp = Spacing::constant(h);
    let mut d = discretize_boundary(&shape, &sp, seed)?;
    fill_interior(&mut d, &shape, &sp, seed + 1)?;
    find_closest_stencils(&mut d, n, &NodeFilter::All, &NodeFilter::All)?;
    Ok(d)
}

fn explicit_implicit() -> Res<Verdict> {
    let d = disk_domain(0.0445, 12, 5)?;
    let s = compute_shapes(
        &d,
        &ApproxEngine::rbffd(Rbf::Polyharmonic(3), 2),
        &ShapeRequest::new().laplacian(),
        &NodeFilter::Interior,
    )?;
    let mut sys = SparseSystem::new(d.size());
    for i in d.interior() {
        sys.assemble_interior_row(&s, i, &[(1.0, Family::Laplacian)], 0.0)?;
    }
    for i in d.boundary() {
        sys.assemble_dirichlet_row(i, 0.0)?;
    }
    let (m, _) = sys.finalize()?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..50 {
        let u: Vec<f64> = (0..d.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mu = m.mul_vec(&u);
        for i in d.interior() {
            if mu[i] != s.lap(&u, i)? {
                mismatches += 1;
            }
        }
    }
    verdict(
        mismatches == 0,
        format!("N = {}, {mismatches} differing rows over 50 fields", d.size()),
    )
}

// 6 ------------------------------------------------------------------------

fn heat_steady_state() -> Res<Verdict> {
    let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 2);
    let r = heat_comparison(0.0225, 0.25, 1, &engine, 12, 0.5, 1.0, &SparseSolverConfig::default())?;
    verdict(
        r.e_inf <= 5e-3,
        format!(
            "N = {}, e_inf = {:.2e}, last change/dt = {:.1e}",
            r.domain.size(),
            r.e_inf,
            r.last_rate
        ),
    )
}

// 7 ------------------------------------------------------------------------

/// Worst ratio `distance / (gamma * min h)` over pairs involving a filled node
/// (must be >= 1) and worst `nearest / (2 h)` over probes (must be <= 1).
fn fill_quality<const D: usize>(shape: &Shape<D>, h: &Spacing<D>, seed: u64, probes: usize) -> Res<(f64, f64, usize)> {
    let mut d = discretize_boundary(shape, h, seed)?;
    fill_interior(&mut d, shape, h, seed + 1)?;
    let p = d.positions();
    let mut packing = f64::INFINITY;
    for i in 0..p.len() {
        for j in 0..i {
            if d.type_of(i) < 0 && d.type_of(j) < 0 {
                continue;
            }
            let r = MIN_DISTANCE_FACTOR * h.eval(&p[i]).min(h.eval(&p[j]));
            packing = packing.min((p[i] - p[j]).norm() / r);
        }
    }
    let (lo, hi) = shape.bbox();
    let mut coverage: f64 = 0.0;
    for k in 0..probes.pow(D as u32) {
        let mut rest = k;
        let q = Point::<D>::from_fn(|a, _| {
            let t = (rest % probes) as f64 / (probes - 1) as f64;
            rest /= probes;
            lo[a] + t * (hi[a] - lo[a])
        });
        if shape.contains(&q) {
            let nearest = p.iter().map(|x| (x - q).norm()).fold(f64::INFINITY, f64::min);
            coverage = coverage.max(nearest / (2.0 * h.eval(&q)));
        }
    }
    Ok((packing, coverage, d.size()))
}

fn node_generation() -> Res<Verdict> {
    let square = Shape::cuboid(Point::<2>::zeros(), Point::<2>::new(1.0, 1.0))?;
    let disk = Shape::ball(Point::<2>::new(0.2, -0.1), 0.6)?;
    let cube = Shape::cuboid(Point::<3>::zeros(), Point::<3>::new(1.0, 1.0, 1.0))?;
    let ball = Shape::ball(Point::<3>::zeros(), 0.7)?;
    let mut packing = f64::INFINITY;
    let mut coverage: f64 = 0.0;
    let mut fills = 0;
    for seed in 0..3u64 {
        for shape in [&square, &disk] {
            for h in [
                Spacing::constant(0.03),
                Spacing::new(|p: &Point<2>| 0.015 + 0.03 * (p[0] + 0.7)),
            ] {
                let (pk, cv, _) = fill_quality(shape, &h, 10 * seed, 70)?;
                packing = packing.min(pk);
                coverage = coverage.max(cv);
                fills += 1;
            }
        }
    }
    for seed in 0..2u64 {
        for shape in [&cube, &ball] {
            for h in [
                Spacing::constant(0.1),
                Spacing::new(|p: &Point<3>| 0.07 + 0.06 * (p[2] + 0.7)),
            ] {
                let (pk, cv, _) = fill_quality(shape, &h, 10 * seed + 1, 20)?;
                packing = packing.min(pk);
                coverage = coverage.max(cv);
                fills += 1;
            }
        }
    }
    verdict(
        packing >= 1.0 - 1e-9 && coverage <= 1.0,
        format!("{fills} fills, min distance / (gamma h) = {packing:.3}, max gap / (2h) = {coverage:.3}"),
    )
}

// 8 ------------------------------------------------------------------------

fn solver_contract() -> Res<Verdict> {
    // u'' = -pi^2 sin(pi x) on (0, 1), u = 0 at both ends
    let n = 101;
    let mut d = DomainDiscretization::<1>::new();
    for k in 0..n {
        let p = Point::<1>::new(k as f64 / (n - 1) as f64);
        if k == 0 || k == n - 1 {
            d.add_boundary_node(p, -1, Point::<1>::new(if k == 0 { -1.0 } else { 1.0 }))?;
        } else {
            d.add_internal_node(p, 1)?;
        }
    }
    find_closest_stencils(&mut d, 3, &NodeFilter::Interior, &NodeFilter::All)?;
    let engine = ApproxEngine::gwls(
        Basis::Monomials(MonomialBasis::TotalDegree(2)),
        WeightFunction::ConstantOne,
    );
    let s = compute_shapes(&d, &engine, &ShapeRequest::new().laplacian(), &NodeFilter::Interior)?;
    let pi = std::f64::consts::PI;
    let rhs = |p: &Point<1>| -pi * pi * (pi * p[0]).sin();
    let zero = |_: &Point<1>| 0.0;
    let problem = SteadyProblem {
        terms: vec![(1.0, Family::Laplacian)],
        rhs: &rhs,
        dirichlet: &zero,
        neumann: &zero,
        neumann_types: &[],
    };
    let (m, r) = assemble_steady(&d, &s, &problem)?.finalize()?;
    let out = solve_sparse(&m, &r, &SparseSolverConfig::default())?;
    let exact: Vec<f64> = d.positions().iter().map(|p| (pi * p[0]).sin()).collect();
    let e_inf = max_diff(&out.solution, &exact);
    let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let gap = (m.residual_norm(&out.solution, &r) / rnorm - out.residual).abs();
    verdict(
        out.converged && e_inf <= 1e-3 && gap <= 1e-12,
        format!("e_inf = {e_inf:.2e}, residual mismatch {gap:.1e}"),
    )
}

// 9 ------------------------------------------------------------------------

/// Runs the binary and returns the output files that must be reproducible:
/// every CSV except the timing table, and the manifest.
fn cli_outputs(args: &[&str], threads: usize, dir: &Path) -> Res<BTreeMap<String, Vec<u8>>> {
    let status = Command::new(env!("CARGO_BIN_EXE_meshless"))
        .args(args)
        .arg("--quiet")
        .arg("--out")
        .arg(dir)
        .env("MESHFREE_THREADS", threads.to_string())
        .status()?;
    if !status.success() {
        return Err(format!("meshless {} failed: {status}", args.join(" ")).into());
    }
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        if name != "records.csv" {
            files.insert(name, std::fs::read(&path)?);
        }
    }
    Ok(files)
}

fn determinism() -> Res<Verdict> {
    let tmp = tempfile::tempdir()?;
    let small_bench = |dim: usize, hs: &str| -> Res<String> {
        let path = tmp.path().join(format!("bench{dim}.toml"));
        std::fs::write(
            &path,
            format!("experiment = \"poisson-bench\"\ndim = {dim}\nseed = 3\n\n[geometry]\nh = {hs}\n\n[run]\nrepetitions = 1\n"),
        )?;
        Ok(path.to_string_lossy().into_owned())
    };
    let b2 = small_bench(2, "[0.08, 0.04, 0.02]")?;
    let b3 = small_bench(3, "[0.25, 0.18, 0.12]")?;
    let runs: Vec<Vec<&str>> = vec![
        vec!["fill-demo", "--dim", "2", "--seed", "1"],
        vec!["fill-demo", "--dim", "3", "--seed", "1"],
        vec!["approx-convergence"],
        vec!["poisson-bench", "--config", &b2],
        vec!["poisson-bench", "--config", &b3],
    ];
    let mut differing = Vec::new();
    let mut compared = 0;
    for (k, args) in runs.iter().enumerate() {
        let first = cli_outputs(args, 1, &tmp.path().join(format!("{k}a")))?;
        let again = cli_outputs(args, 1, &tmp.path().join(format!("{k}b")))?;
        let eight = cli_outputs(args, 8, &tmp.path().join(format!("{k}c")))?;
        compared += first.len();
        if first != again || first != eight {
            differing.push(args.join(" "));
        }
    }
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{compared} files identical over repeated runs and 1/8 threads")
        } else {
            format!("differs: {}", differing.join("; "))
        },
    )
}

// 10 -----------------------------------------------------------------------

fn stage_gap<const D: usize>(r: &PoissonRun<D>) -> f64 {
    (r.timings.as_array().iter().sum::<f64>() - r.wall).abs() / r.wall
}

fn weight_seconds(d: &DomainDiscretization<2>, threads: usize) -> Res<f64> {
    let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 2);
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let start = Instant::now();
        compute_shapes_with_threads(
            d,
            &engine,
            &ShapeRequest::new().laplacian(),
            &NodeFilter::Interior,
            threads,
        )?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

fn timing_breakdown(study: Option<&PoissonStudy>) -> Res<Verdict> {
    let study = study.ok_or("needs the Poisson runs of criterion 4")?;
    let gap = stage_gap(&study.largest_2d).max(stage_gap(&study.largest_3d));
    let d = &study.largest_2d.domain;
    let t1 = weight_seconds(d, 1)?;
    let t4 = weight_seconds(d, 4)?;
    let ratio = t4 / t1;
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdict(
        gap <= 0.05 && ratio <= 0.6 && d.size() >= 10_000,
        format!(
            "stage sum within {:.2}% of wall; weights at N = {}: {t1:.3} s (1 thread) vs {t4:.3} s (4 threads), ratio {ratio:.2} on {cpus} CPU(s)",
            100.0 * gap,
            d.size()
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let mut study = None;
    type Criterion<'a> = (usize, &'static str, Option<f64>, Box<dyn FnOnce() -> Res<Verdict> + 'a>);
    let study_ref = &mut study;
    let criteria: Vec<Criterion> = vec![
        (1, "classical 5-point stencil", Some(1.0), Box::new(classical_stencil)),
        (2, "monomial exactness", Some(10.0), Box::new(monomial_exactness)),
        (3, "approximation orders", Some(60.0), Box::new(approximation_orders)),
        (
            4,
            "Poisson convergence order",
            Some(300.0),
            Box::new(move || poisson_orders(study_ref)),
        ),
        (
            5,
            "explicit/implicit consistency",
            Some(5.0),
            Box::new(explicit_implicit),
        ),
        (6, "heat steady state", Some(120.0), Box::new(heat_steady_state)),
        (7, "node generation", Some(60.0), Box::new(node_generation)),
        (8, "solver contract", Some(1.0), Box::new(solver_contract)),
        (9, "determinism", None, Box::new(determinism)),
    ];
    let mut passed = 0;
    let mut total = 0;
    let mut report = |id: usize, name: &str, budget: Option<f64>, f: Box<dyn FnOnce() -> Res<Verdict> + '_>| {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(Ok(v)) => (v.pass, v.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        let in_time = budget.is_none_or(|b| secs < b);
        let ok = pass && in_time;
        let budget = budget.map_or(String::new(), |b| format!(" / {b} s"));
        println!(
            "{} {id:>2} {name}: {detail} [{secs:.2} s{budget}]",
            if ok { "PASS" } else { "FAIL" }
        );
        total += 1;
        passed += ok as usize;
    };
    for (id, name, budget, f) in criteria {
        report(id, name, budget, f);
    }
    report(
        10,
        "timing breakdown",
        None,
        Box::new(|| timing_breakdown(study.as_ref())),
    );
    println!("{passed}/{total} criteria passed");
    if passed < total && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
