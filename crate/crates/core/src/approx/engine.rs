use nalgebra::{DMatrix, DVector};

use crate::Point;

use super::dense::{SingularMatrix, TransposedSolver};
use super::operator::{apply_operator_to_basis, BasisElement};
use super::{ApproxError, DenseSolverKind, MonomialBasis, Operator, Rbf};

/// Basis of a weighted least squares approximation.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Monomials(MonomialBasis),
    /// `phi(|x - x_j|)` centered at the stencil nodes.
    Rbf(Rbf),
}

/// Least squares weight `omega`, evaluated at scaled offsets `(p_i - p*) / s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightFunction {
    ConstantOne,
    /// `exp(-(|x| / sigma)^2)`
    Gaussian(f64),
}

impl WeightFunction {
    pub fn eval<const D: usize>(&self, x: &Point<D>) -> f64 {
        match *self {
            WeightFunction::ConstantOne => 1.0,
            WeightFunction::Gaussian(s) => (-x.norm_squared() / (s * s)).exp(),
        }
    }
}

/// How the local scale `s` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ScaleRule {
    /// `s = 1`
    None,
    /// Distance from the center to the closest stencil node not at the center.
    NearestNeighbor,
    /// Distance from the center to the farthest stencil node.
    #[default]
    SupportRadius,
}

impl ScaleRule {
    /// Falls back to 1 when all stencil nodes coincide with the center.
    pub fn scale<const D: usize>(&self, points: &[Point<D>], center: &Point<D>) -> f64 {
        let dists = points.iter().map(|p| (p - center).norm());
        let s = match self {
            ScaleRule::None => 1.0,
            ScaleRule::NearestNeighbor => dists.filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min),
            ScaleRule::SupportRadius => dists.fold(0.0, f64::max),
        };
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    }
}

/// Method for computing stencil weights. Immutable; weight computation may be
/// called concurrently.
#[derive(Clone, Debug, PartialEq)]
pub enum ApproxEngine {
    Gwls {
        basis: Basis,
        weight: WeightFunction,
        scale: ScaleRule,
        solver: DenseSolverKind,
    },
    RbfFd {
        rbf: Rbf,
        /// Degree of monomial augmentation, `-1` for none.
        augmentation: i32,
        scale: ScaleRule,
        solver: DenseSolverKind,
    },
}

impl ApproxEngine {
    pub fn gwls(basis: Basis, weight: WeightFunction) -> Self {
        ApproxEngine::Gwls {
            basis,
            weight,
            scale: ScaleRule::default(),
            solver: DenseSolverKind::default(),
        }
    }

    pub fn rbffd(rbf: Rbf, augmentation: i32) -> Self {
        ApproxEngine::RbfFd {
            rbf,
            augmentation,
            scale: ScaleRule::default(),
            solver: DenseSolverKind::default(),
        }
    }

    pub fn with_scale(mut self, rule: ScaleRule) -> Self {
        match &mut self {
            ApproxEngine::Gwls { scale, .. } | ApproxEngine::RbfFd { scale, .. } => *scale = rule,
        }
        self
    }

    pub fn with_solver(mut self, kind: DenseSolverKind) -> Self {
        match &mut self {
            ApproxEngine::Gwls { solver, .. } | ApproxEngine::RbfFd { solver, .. } => *solver = kind,
        }
        self
    }

    pub fn solver(&self) -> DenseSolverKind {
        match self {
            ApproxEngine::Gwls { solver, .. } | ApproxEngine::RbfFd { solver, .. } => *solver,
        }
    }

    pub fn validate(&self) -> Result<(), ApproxError> {
        match self {
            ApproxEngine::Gwls { basis, weight, .. } => {
                if let Basis::Rbf(rbf) = basis {
                    rbf.validate()?;
                }
                if let Basis::Monomials(MonomialBasis::TotalDegree(m)) = basis {
                    if *m < 0 {
                        return Err(ApproxError::InvalidParameter(
                            "least squares basis must not be empty".into(),
                        ));
                    }
                }
                if let WeightFunction::Gaussian(s) = weight {
                    if !(*s > 0.0 && s.is_finite()) {
                        return Err(ApproxError::InvalidParameter(format!(
                            "weight function width must be positive, got {s}"
                        )));
                    }
                }
                Ok(())
            }
            ApproxEngine::RbfFd { rbf, augmentation, .. } => {
                rbf.validate()?;
                if *augmentation < -1 {
                    return Err(ApproxError::InvalidParameter(format!(
                        "augmentation degree must be at least -1, got {augmentation}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Factorizes the local system for a stencil; the result computes weights for
    /// any number of operators.
    pub fn prepare<const D: usize>(&self, points: &[Point<D>], center: &Point<D>) -> Result<Prepared<D>, ApproxError> {
        self.validate()?;
        let n = points.len();
        if n == 0 {
            return Err(ApproxError::TooFewNodes {
                required: 1,
                available: 0,
            });
        }
        match self {
            ApproxEngine::Gwls {
                basis,
                weight,
                scale,
                solver,
            } => {
                let s = scale.scale(points, center);
                let local: Vec<Point<D>> = points.iter().map(|p| (p - center) / s).collect();
                let elements = match basis {
                    Basis::Monomials(mb) => Elements::Monomials(mb.exponents::<D>()),
                    Basis::Rbf(rbf) => Elements::Radial(*rbf, local.clone()),
                };
                let m = elements.len();
                if m > n {
                    return Err(ApproxError::Underdetermined { basis: m, nodes: n });
                }
                let w: Vec<f64> = local.iter().map(|x| weight.eval(x)).collect();
                let mut wb = DMatrix::<f64>::zeros(n, m);
                for i in 0..n {
                    for j in 0..m {
                        wb[(i, j)] = w[i] * elements.eval(j, &local[i], &Operator::Identity, 1.0)?;
                    }
                }
                let factor = TransposedSolver::new(wb, *solver)
                    .map_err(|SingularMatrix| ApproxError::RankDeficient { solver: solver.name() })?;
                Ok(Prepared {
                    scale: s,
                    n,
                    elements,
                    row_weights: Some(w),
                    factor,
                    solver: *solver,
                    center: *center,
                })
            }
            ApproxEngine::RbfFd {
                rbf,
                augmentation,
                scale,
                solver,
            } => {
                let s = scale.scale(points, center);
                let local: Vec<Point<D>> = points.iter().map(|p| (p - center) / s).collect();
                let exps = MonomialBasis::TotalDegree(*augmentation).exponents::<D>();
                let l = exps.len();
                if n < l {
                    return Err(ApproxError::TooFewNodes {
                        required: l,
                        available: n,
                    });
                }
                let singular = || ApproxError::SingularSaddle {
                    center: format!("{:?}", center.as_slice()),
                    nodes: n,
                };
                let mut m = DMatrix::<f64>::zeros(n + l, n + l);
                for i in 0..n {
                    for j in 0..=i {
                        let v = rbf.value((local[i] - local[j]).norm());
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                    for (k, e) in exps.iter().enumerate() {
                        let v = super::monomial::monomial_derivative(e, &[0; D], &local[i]);
                        m[(i, n + k)] = v;
                        m[(n + k, i)] = v;
                    }
                }
                if l > 0 {
                    // a polynomial vanishing on the whole stencil makes the saddle
                    // matrix singular whatever the solver
                    let q = m.view((0, n), (n, l)).clone_owned();
                    let sv = q.singular_values();
                    if !(sv.min() > 1e-10 * sv.max()) {
                        return Err(singular());
                    }
                }
                let factor = TransposedSolver::new(m, *solver).map_err(|SingularMatrix| singular())?;
                if *solver == DenseSolverKind::ColPivQr && factor.rank() < n + l {
                    return Err(singular());
                }
                Ok(Prepared {
                    scale: s,
                    n,
                    elements: Elements::Augmented(*rbf, local, exps),
                    row_weights: None,
                    factor,
                    solver: *solver,
                    center: *center,
                })
            }
        }
    }

    /// Weights `w` with `w^T u(points) ~ (L u)(center)`.
    pub fn weights<const D: usize>(
        &self,
        points: &[Point<D>],
        center: &Point<D>,
        op: &Operator<D>,
    ) -> Result<Vec<f64>, ApproxError> {
        self.prepare(points, center)?.weights(op)
    }
}

#[derive(Debug, Clone)]
enum Elements<const D: usize> {
    Monomials(Vec<[u32; D]>),
    Radial(Rbf, Vec<Point<D>>),
    /// RBF centered at every node followed by monomials.
    Augmented(Rbf, Vec<Point<D>>, Vec<[u32; D]>),
}

impl<const D: usize> Elements<D> {
    fn len(&self) -> usize {
        match self {
            Elements::Monomials(e) => e.len(),
            Elements::Radial(_, c) => c.len(),
            Elements::Augmented(_, c, e) => c.len() + e.len(),
        }
    }

    fn eval(&self, j: usize, x: &Point<D>, op: &Operator<D>, scale: f64) -> Result<f64, ApproxError> {
        let element = match self {
            Elements::Monomials(e) => BasisElement::Monomial(&e[j]),
            Elements::Radial(rbf, c) => BasisElement::Radial {
                rbf: *rbf,
                center: c[j],
            },
            Elements::Augmented(rbf, c, e) => {
                if j < c.len() {
                    BasisElement::Radial {
                        rbf: *rbf,
                        center: c[j],
                    }
                } else {
                    BasisElement::Monomial(&e[j - c.len()])
                }
            }
        };
        apply_operator_to_basis(op, &element, x, scale)
    }
}

/// A factorized local system.
#[derive(Debug, Clone)]
pub struct Prepared<const D: usize> {
    scale: f64,
    n: usize,
    elements: Elements<D>,
    /// Diagonal of `W` for least squares, `None` for RBF-FD.
    row_weights: Option<Vec<f64>>,
    factor: TransposedSolver,
    solver: DenseSolverKind,
    center: Point<D>,
}

impl<const D: usize> Prepared<D> {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn weights(&self, op: &Operator<D>) -> Result<Vec<f64>, ApproxError> {
        op.validate()?;
        let origin = Point::<D>::zeros();
        let rhs = DVector::from_iterator(
            self.elements.len(),
            (0..self.elements.len())
                .map(|j| self.elements.eval(j, &origin, op, self.scale))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let y = self
            .factor
            .solve(&rhs)
            .map_err(|SingularMatrix| match self.row_weights {
                Some(_) => ApproxError::RankDeficient {
                    solver: self.solver.name(),
                },
                None => ApproxError::SingularSaddle {
                    center: format!("{:?}", self.center.as_slice()),
                    nodes: self.n,
                },
            })?;
        Ok(match &self.row_weights {
            Some(w) => (0..self.n).map(|i| w[i] * y[i]).collect(),
            None => y.as_slice()[..self.n].to_vec(),
        })
    }
}
