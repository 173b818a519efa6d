//! Stencil weights for linear differential operators.
//!
//! Two engines are available: generalized weighted least squares over a
//! monomial or RBF basis, and RBF-FD with optional monomial augmentation.
//! Both evaluate everything in shifted and scaled coordinates `(p - p*) / s`.

mod dense;
mod engine;
mod monomial;
mod operator;
mod rbf;

use thiserror::Error;

pub use dense::{DenseSolverKind, QR_RELATIVE_CUTOFF, SVD_RELATIVE_CUTOFF};
pub use engine::{ApproxEngine, Basis, Prepared, ScaleRule, WeightFunction};
pub use monomial::{monomial_derivative, polynomial_space_dim, MonomialBasis};
pub use operator::{apply_operator_to_basis, BasisElement, CustomOperator, Operator};
pub use rbf::Rbf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("basis function not differentiable: {0}")]
    Singular(String),
    #[error("rank-deficient local system under the {solver} solver; use the qr or svd solver instead")]
    RankDeficient { solver: &'static str },
    #[error("least squares basis has {basis} functions but the stencil only {nodes} nodes")]
    Underdetermined { basis: usize, nodes: usize },
    #[error("stencil has {available} nodes, at least {required} required")]
    TooFewNodes { required: usize, available: usize },
    #[error("singular RBF-FD system at node {center} with {nodes} stencil nodes; try a larger stencil")]
    SingularSaddle { center: String, nodes: usize },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Point;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    fn five_point(h: f64) -> Vec<Point<2>> {
        vec![
            Point::<2>::new(0.0, 0.0),
            Point::<2>::new(h, 0.0),
            Point::<2>::new(-h, 0.0),
            Point::<2>::new(0.0, h),
            Point::<2>::new(0.0, -h),
        ]
    }

    #[test]
    fn gwls_five_point_laplacian() {
        let pts = five_point(0.1);
        for solver in [
            DenseSolverKind::PartialPivLu,
            DenseSolverKind::ColPivQr,
            DenseSolverKind::Svd,
        ] {
            for scale in [ScaleRule::None, ScaleRule::NearestNeighbor] {
                let engine = ApproxEngine::gwls(
                    Basis::Monomials(MonomialBasis::PurePowers(2)),
                    WeightFunction::ConstantOne,
                )
                .with_solver(solver)
                .with_scale(scale);
                let w = engine.weights(&pts, &pts[0], &Operator::Laplacian).unwrap();
                assert!(
                    close(&w, &[-400.0, 100.0, 100.0, 100.0, 100.0], 1e-10),
                    "{solver:?} {scale:?}: {w:?}"
                );
            }
        }
    }

    #[test]
    fn gwls_identity_at_node() {
        let pts = five_point(0.3);
        let engine = ApproxEngine::gwls(
            Basis::Monomials(MonomialBasis::PurePowers(2)),
            WeightFunction::Gaussian(1.0),
        )
        .with_solver(DenseSolverKind::PartialPivLu);
        let w = engine.weights(&pts, &pts[1], &Operator::Identity).unwrap();
        assert!(close(&w, &[0.0, 1.0, 0.0, 0.0, 0.0], 1e-12), "{w:?}");
    }

    #[test]
    fn central_difference_1d() {
        let h = 0.1;
        let pts = vec![Point::<1>::new(0.0), Point::<1>::new(-h), Point::<1>::new(h)];
        let gwls = ApproxEngine::gwls(
            Basis::Monomials(MonomialBasis::TotalDegree(2)),
            WeightFunction::ConstantOne,
        );
        let rbffd = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 1);
        for engine in [gwls, rbffd] {
            let w = engine.weights(&pts, &pts[0], &Operator::Derivative(0)).unwrap();
            assert!(close(&w, &[0.0, -5.0, 5.0], 1e-10), "{engine:?}: {w:?}");
        }
    }

    #[test]
    fn constant_reproduction_and_scale_covariance() {
        let pts: Vec<Point<2>> = (0..12)
            .map(|i| {
                let t = i as f64;
                if i == 0 {
                    Point::<2>::zeros()
                } else {
                    Point::<2>::new((1.3 * t).cos(), (1.3 * t).sin()) * (0.3 + 0.05 * t)
                }
            })
            .collect();
        let engine = ApproxEngine::rbffd(Rbf::Polyharmonic(5), 2);
        let w = engine.weights(&pts, &pts[0], &Operator::Laplacian).unwrap();
        let l1: f64 = w.iter().map(|x| x.abs()).sum();
        assert!(w.iter().sum::<f64>().abs() <= 1e-9 * l1);
        let doubled: Vec<Point<2>> = pts.iter().map(|p| p * 2.0).collect();
        let w2 = engine.weights(&doubled, &doubled[0], &Operator::Laplacian).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            assert!((b - a / 4.0).abs() <= 1e-9 * l1 / 4.0);
        }
    }

    #[test]
    fn errors() {
        let pts = five_point(0.1);
        let big = ApproxEngine::gwls(
            Basis::Monomials(MonomialBasis::TotalDegree(2)),
            WeightFunction::ConstantOne,
        );
        assert!(matches!(
            big.weights(&pts, &pts[0], &Operator::Laplacian),
            Err(ApproxError::Underdetermined { basis: 6, nodes: 5 })
        ));
        // collinear nodes cannot resolve y
        let line: Vec<Point<2>> = (0..5).map(|i| Point::<2>::new(i as f64, 0.0)).collect();
        let lu = ApproxEngine::gwls(
            Basis::Monomials(MonomialBasis::TotalDegree(1)),
            WeightFunction::ConstantOne,
        )
        .with_solver(DenseSolverKind::PartialPivLu);
        let err = lu.weights(&line, &line[0], &Operator::Derivative(0)).unwrap_err();
        assert!(matches!(err, ApproxError::RankDeficient { .. }));
        assert!(err.to_string().contains("qr or svd"));
        // svd still produces the minimum-norm answer for d/dx
        let svd = lu.clone().with_solver(DenseSolverKind::Svd);
        let w = svd.weights(&line, &line[0], &Operator::Derivative(0)).unwrap();
        let slope: f64 = w.iter().zip(&line).map(|(w, p)| w * p[0]).sum();
        assert!((slope - 1.0).abs() < 1e-10);
        // linear polynomial y vanishes on the line: singular saddle
        let rbf = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 1);
        let err = rbf.weights(&line, &line[0], &Operator::Laplacian).unwrap_err();
        assert!(matches!(err, ApproxError::SingularSaddle { nodes: 5, .. }));
        assert!(err.to_string().contains("larger stencil"));
        let few = ApproxEngine::rbffd(Rbf::Polyharmonic(3), 2);
        assert!(matches!(
            few.weights(&pts, &pts[0], &Operator::Laplacian),
            Err(ApproxError::TooFewNodes {
                required: 6,
                available: 5
            })
        ));
        // r^1 has no Laplacian at the center node
        let phs1 = ApproxEngine::rbffd(Rbf::Polyharmonic(1), 0);
        assert!(matches!(
            phs1.weights(&pts, &pts[0], &Operator::Laplacian),
            Err(ApproxError::Singular(_))
        ));
    }
}
