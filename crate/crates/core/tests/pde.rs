use meshless::approx::{ApproxEngine, Basis, MonomialBasis, Rbf, WeightFunction};
use meshless::geometry::{
    discretize_boundary, fill_interior, find_closest_stencils, find_closest_stencils_from, DomainDiscretization,
    NodeFilter, Shape, Spacing,
};
use meshless::operators::{compute_shapes, Family, ShapeRequest, ShapeStorage};
use meshless::pde::{
    assemble_steady, run_heat_explicit, solve_sparse, solve_steady, stable_time_step, HeatProblem, PdeError,
    SparseSolverConfig, SteadyProblem,
};
use meshless::Point;

const HOLE: i32 = -2;

/// Unit square minus a disk whose boundary is tagged [`HOLE`]. Nodes on the
/// hole take their stencils from the interior only.
fn holed_square(h: f64) -> (DomainDiscretization<2>, ShapeStorage<2>) {
    let hole = Shape::ball(Point::<2>::new(0.5, 0.5), 0.25)
        .unwrap()
        .with_boundary_type(HOLE)
        .unwrap();
    let shape = Shape::cuboid(Point::<2>::zeros(), Point::<2>::new(1.0, 1.0))
        .unwrap()
        .difference(hole);
    let sp = Spacing::constant(h);
    let mut d = discretize_boundary(&shape, &sp, 1).unwrap();
    fill_interior(&mut d, &shape, &sp, 2).unwrap();
    find_closest_stencils(&mut d, 12, &NodeFilter::All, &NodeFilter::All).unwrap();
    find_closest_stencils_from(&mut d, 12, &NodeFilter::Type(HOLE), &NodeFilter::Interior).unwrap();
    let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 2);
    let s = compute_shapes(
        &d,
        &engine,
        &ShapeRequest::new().laplacian().first_derivatives(),
        &NodeFilter::All,
    )
    .unwrap();
    (d, s)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn poisson_1d() {
    // u'' = -pi^2 sin(pi x), u(0) = u(1) = 0
    let n = 101;
    let mut d = DomainDiscretization::<1>::new();
    for k in 0..n {
        let p = Point::<1>::new(k as f64 / (n - 1) as f64);
        if k == 0 || k == n - 1 {
            d.add_boundary_node(p, -1, Point::<1>::new(if k == 0 { -1.0 } else { 1.0 }))
                .unwrap();
        } else {
            d.add_internal_node(p, 1).unwrap();
        }
    }
    find_closest_stencils(&mut d, 3, &NodeFilter::Interior, &NodeFilter::All).unwrap();
    let engine = ApproxEngine::gwls(
        Basis::Monomials(MonomialBasis::TotalDegree(2)),
        WeightFunction::ConstantOne,
    );
    let s = compute_shapes(&d, &engine, &ShapeRequest::new().laplacian(), &NodeFilter::Interior).unwrap();
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
    let (m, r) = assemble_steady(&d, &s, &problem).unwrap().finalize().unwrap();
    let out = solve_sparse(&m, &r, &SparseSolverConfig::default()).unwrap();
    assert!(out.converged);
    let exact: Vec<f64> = d.positions().iter().map(|p| (pi * p[0]).sin()).collect();
    assert!(max_diff(&out.solution, &exact) <= 1e-3);
    let res = m.residual_norm(&out.solution, &r) / r.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((res - out.residual).abs() <= 1e-12);
}

#[test]
fn constant_dirichlet_data_gives_constant_solution() {
    let (d, s) = holed_square(0.05);
    let zero = |_: &Point<2>| 0.0;
    let c = |_: &Point<2>| 2.5;
    let problem = SteadyProblem {
        terms: vec![(-1.0, Family::Laplacian)],
        rhs: &zero,
        dirichlet: &c,
        neumann: &zero,
        neumann_types: &[],
    };
    let out = solve_steady(&d, &s, &problem, &SparseSolverConfig::default()).unwrap();
    assert!(out.solution.iter().all(|u| (u - 2.5).abs() < 1e-8));
}

#[test]
fn heat_zero_fixed_point() {
    let (d, s) = holed_square(0.05);
    let zero = |_: &Point<2>| 0.0;
    let zero_t = |_: &Point<2>, _: f64| 0.0;
    let problem = HeatProblem {
        dt: 0.5 * stable_time_step(&d),
        steps: 200,
        initial: &zero,
        source: &zero_t,
        dirichlet: &zero_t,
        neumann: &zero_t,
        neumann_types: &[],
        snapshot_every: 0,
    };
    let out = run_heat_explicit(&d, &s, &problem).unwrap();
    assert!(out.field.iter().all(|u| *u == 0.0));
    assert_eq!(out.last_change, 0.0);
}

#[test]
fn heat_assigns_dirichlet_data_every_step() {
    let (d, s) = holed_square(0.05);
    let dt = 0.5 * stable_time_step(&d);
    let g = |p: &Point<2>, t: f64| p[0] * (1.0 + t) - p[1];
    let zero = |_: &Point<2>| 0.0;
    let zero_t = |_: &Point<2>, _: f64| 0.0;
    let problem = HeatProblem {
        dt,
        steps: 30,
        initial: &zero,
        source: &zero_t,
        dirichlet: &g,
        neumann: &zero_t,
        neumann_types: &[HOLE],
        snapshot_every: 1,
    };
    let out = run_heat_explicit(&d, &s, &problem).unwrap();
    assert_eq!(out.snapshots.len(), 30);
    for (k, u) in &out.snapshots {
        let t = *k as f64 * dt;
        for i in NodeFilter::Type(-1).select(&d) {
            assert_eq!(u[i], g(d.pos(i), t));
        }
    }
}

#[test]
fn heat_time_error_is_first_order() {
    let (d, s) = holed_square(0.05);
    let dt = 0.4 * stable_time_step(&d);
    let steps = 64;
    let initial = |p: &Point<2>| (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin();
    let source = |p: &Point<2>, t: f64| p[0] * t;
    let zero_t = |_: &Point<2>, _: f64| 0.0;
    let run = |refine: usize| {
        let problem = HeatProblem {
            dt: dt / refine as f64,
            steps: steps * refine,
            initial: &initial,
            source: &source,
            dirichlet: &zero_t,
            neumann: &zero_t,
            neumann_types: &[HOLE],
            snapshot_every: 0,
        };
        run_heat_explicit(&d, &s, &problem).unwrap().field
    };
    let reference = run(8);
    let e1 = max_diff(&run(1), &reference);
    let e2 = max_diff(&run(2), &reference);
    // errors against a dt/8 reference shrink by 8/7 * 3/4 * 2 = 12/7 per halving
    let ratio = e1 / e2;
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn heat_reaches_the_steady_solution() {
    let (d, s) = holed_square(0.04);
    let dt = 0.5 * stable_time_step(&d);
    let steps = (0.8 / dt).ceil() as usize;
    let zero = |_: &Point<2>| 0.0;
    let five_t = |_: &Point<2>, _: f64| 5.0;
    let x_t = |p: &Point<2>, _: f64| p[0];
    let zero_t = |_: &Point<2>, _: f64| 0.0;
    let problem = HeatProblem {
        dt,
        steps,
        initial: &zero,
        source: &five_t,
        dirichlet: &x_t,
        neumann: &zero_t,
        neumann_types: &[HOLE],
        snapshot_every: 0,
    };
    let explicit = run_heat_explicit(&d, &s, &problem).unwrap();
    assert!(explicit.last_change <= 1e-10 * dt, "{}", explicit.last_change / dt);

    let five = |_: &Point<2>| 5.0;
    let x = |p: &Point<2>| p[0];
    let steady = SteadyProblem {
        terms: vec![(-1.0, Family::Laplacian)],
        rhs: &five,
        dirichlet: &x,
        neumann: &zero,
        neumann_types: &[HOLE],
    };
    let implicit = solve_steady(&d, &s, &steady, &SparseSolverConfig::default()).unwrap();
    assert!(max_diff(&explicit.field, &implicit.solution) <= 5e-3);
}

#[test]
fn unstable_time_step_is_reported() {
    let (d, s) = holed_square(0.05);
    let zero = |_: &Point<2>| 0.0;
    let one_t = |_: &Point<2>, _: f64| 1.0;
    let zero_t = |_: &Point<2>, _: f64| 0.0;
    let problem = HeatProblem {
        dt: 50.0 * stable_time_step(&d),
        steps: 5000,
        initial: &zero,
        source: &one_t,
        dirichlet: &zero_t,
        neumann: &zero_t,
        neumann_types: &[],
        snapshot_every: 0,
    };
    assert!(matches!(
        run_heat_explicit(&d, &s, &problem),
        Err(PdeError::Unstable { .. })
    ));
}

#[test]
fn convection_diffusion_3d_residual() {
    // -2 lap u + 8 (2, 1, -1) . grad u = 1, u = 0 on the boundary
    let shape = Shape::cuboid(Point::<3>::zeros(), Point::<3>::new(1.0, 1.0, 1.0))
        .unwrap()
        .difference(Shape::ball(Point::<3>::new(1.0, 1.0, 0.0), 0.4).unwrap());
    let sp = Spacing::constant(0.1);
    let mut d = discretize_boundary(&shape, &sp, 3).unwrap();
    fill_interior(&mut d, &shape, &sp, 4).unwrap();
    find_closest_stencils(&mut d, 35, &NodeFilter::Interior, &NodeFilter::All).unwrap();
    let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 2);
    let s = compute_shapes(
        &d,
        &engine,
        &ShapeRequest::new().laplacian().first_derivatives(),
        &NodeFilter::Interior,
    )
    .unwrap();
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
    let config = SparseSolverConfig::default();
    let (m, r) = assemble_steady(&d, &s, &problem).unwrap().finalize().unwrap();
    let out = solve_sparse(&m, &r, &config).unwrap();
    assert!(out.converged);
    let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(m.residual_norm(&out.solution, &r) <= config.tol * rnorm);
}
