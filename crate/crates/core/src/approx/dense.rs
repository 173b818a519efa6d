//! Small dense factorizations used to compute stencil weights.
//!
//! Every solver answers the same question: given an `n x m` matrix `A` and a
//! right-hand side `b` of length `m`, find the minimum-norm `y` with `A^T y = b`.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest are treated as zero.
pub const SVD_RELATIVE_CUTOFF: f64 = 1e-13;
/// Same cutoff for the diagonal of the rank-revealing QR.
pub const QR_RELATIVE_CUTOFF: f64 = 1e-13;

/// Dense solver used for the local weight systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DenseSolverKind {
    PartialPivLu,
    #[default]
    ColPivQr,
    Svd,
}

impl DenseSolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            DenseSolverKind::PartialPivLu => "lu",
            DenseSolverKind::ColPivQr => "qr",
            DenseSolverKind::Svd => "svd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SingularMatrix;

/// Factorization of `A` that can solve `A^T y = b` for many `b`.
#[derive(Debug, Clone)]
pub(crate) enum TransposedSolver {
    /// Square `A`: LU of `A^T`.
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    /// Tall `A`: `y = A z` with `(A^T A) z = b`.
    Normal {
        a: DMatrix<f64>,
        lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    },
    Qr(ColPivQr),
    Svd {
        u: DMatrix<f64>,
        inv_sigma: DVector<f64>,
        v_t: DMatrix<f64>,
    },
}

fn lu_checked(m: DMatrix<f64>) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, SingularMatrix> {
    // Only exactly vanishing pivots are rejected: badly conditioned systems
    // are the caller's choice, and their (inaccurate) weights are still returned.
    let lu = m.lu();
    if lu.u().diagonal().iter().any(|d| !(d.abs() > 0.0)) {
        return Err(SingularMatrix);
    }
    Ok(lu)
}

impl TransposedSolver {
    pub fn new(a: DMatrix<f64>, kind: DenseSolverKind) -> Result<Self, SingularMatrix> {
        let (n, m) = a.shape();
        assert!(m <= n, "system has more unknowns than nodes");
        match kind {
            DenseSolverKind::PartialPivLu if n == m => Ok(TransposedSolver::Lu(lu_checked(a.transpose())?)),
            DenseSolverKind::PartialPivLu => {
                let lu = lu_checked(a.tr_mul(&a))?;
                Ok(TransposedSolver::Normal { a, lu })
            }
            DenseSolverKind::ColPivQr => Ok(TransposedSolver::Qr(ColPivQr::new(a))),
            DenseSolverKind::Svd => {
                let svd = a.svd(true, true);
                let max = svd.singular_values.max();
                let inv_sigma = svd.singular_values.map(|s| {
                    if max > 0.0 && s > SVD_RELATIVE_CUTOFF * max {
                        1.0 / s
                    } else {
                        0.0
                    }
                });
                Ok(TransposedSolver::Svd {
                    u: svd.u.expect("requested U"),
                    inv_sigma,
                    v_t: svd.v_t.expect("requested V^T"),
                })
            }
        }
    }

    /// Numerical rank as seen by the factorization (full for LU, which would
    /// have failed otherwise).
    pub fn rank(&self) -> usize {
        match self {
            TransposedSolver::Lu(lu) => lu.u().ncols(),
            TransposedSolver::Normal { a, .. } => a.ncols(),
            TransposedSolver::Qr(qr) => qr.rank,
            TransposedSolver::Svd { inv_sigma, .. } => inv_sigma.iter().filter(|s| **s != 0.0).count(),
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, SingularMatrix> {
        let y = match self {
            TransposedSolver::Lu(lu) => lu.solve(b).ok_or(SingularMatrix)?,
            TransposedSolver::Normal { a, lu } => a * lu.solve(b).ok_or(SingularMatrix)?,
            TransposedSolver::Qr(qr) => qr.solve_transposed(b),
            TransposedSolver::Svd { u, inv_sigma, v_t } => u * (v_t * b).component_mul(inv_sigma),
        };
        if y.iter().all(|v| v.is_finite()) {
            Ok(y)
        } else {
            Err(SingularMatrix)
        }
    }
}

/// Householder QR with column pivoting on the largest remaining column norm,
/// `A P = Q R`, so the diagonal of `R` is non-increasing in magnitude and
/// reveals the numerical rank.
#[derive(Debug, Clone)]
pub(crate) struct ColPivQr {
    /// Thin `Q` restricted to the first `rank` columns.
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    /// Column `k` of `A P` is column `perm[k]` of `A`.
    perm: Vec<usize>,
    rank: usize,
}

impl ColPivQr {
    pub fn new(mut a: DMatrix<f64>) -> Self {
        let (n, m) = a.shape();
        let steps = n.min(m);
        let mut perm: Vec<usize> = (0..m).collect();
        let mut reflectors: Vec<(DVector<f64>, f64)> = Vec::with_capacity(steps);
        for k in 0..steps {
            let (best, _) = (k..m)
                .map(|j| (j, a.view((k, j), (n - k, 1)).norm_squared()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best != k {
                a.swap_columns(k, best);
                perm.swap(k, best);
            }
            let x = a.view((k, k), (n - k, 1)).clone_owned();
            let alpha = x.norm();
            let mut v = DVector::from_column_slice(x.as_slice());
            let mut beta = 0.0;
            if alpha > 0.0 {
                let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
                v[0] += sign * alpha;
                let vv = v.norm_squared();
                beta = 2.0 / vv;
                let mut block = a.view_mut((k, k), (n - k, m - k));
                let proj = block.tr_mul(&v) * beta;
                block -= &v * proj.transpose();
            }
            reflectors.push((v, beta));
        }
        let r = a.view((0, 0), (steps, m)).upper_triangle();
        let r00 = if steps > 0 { r[(0, 0)].abs() } else { 0.0 };
        let rank = (0..steps)
            .take_while(|&k| r00 > 0.0 && r[(k, k)].abs() > QR_RELATIVE_CUTOFF * r00)
            .count();
        // Q e_j for j < rank, applying reflectors in reverse order
        let mut q = DMatrix::<f64>::zeros(n, rank);
        for j in 0..rank {
            q[(j, j)] = 1.0;
        }
        for (k, (v, beta)) in reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let mut block = q.view_mut((k, 0), (n - k, rank));
            let proj = block.tr_mul(v) * *beta;
            block -= v * proj.transpose();
        }
        ColPivQr { q, r, perm, rank }
    }

    /// Minimum-norm `y` with `A^T y = b` on the numerical range of `A`:
    /// `R^T z = P^T b`, `y = Q z`.
    pub fn solve_transposed(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::<f64>::zeros(self.rank);
        for k in 0..self.rank {
            let mut s = b[self.perm[k]];
            for j in 0..k {
                s -= self.r[(j, k)] * z[j];
            }
            z[k] = s / self.r[(k, k)];
        }
        &self.q * z
    }
}
