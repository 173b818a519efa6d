use super::{CsrMatrix, Ilut, SparseError};

#[derive(Debug, Clone)]
pub enum Preconditioner {
    Identity,
    Ilut(Ilut),
}

impl Preconditioner {
    fn apply(&self, x: &mut [f64]) {
        if let Preconditioner::Ilut(ilu) = self {
            ilu.solve_in_place(x);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from the returned solution.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-preconditioned BiCGStab started from `x = 0`, stopping when the
/// iteration residual drops below `tol * ||b||`. If `max_iter` is exhausted the
/// iterate with the smallest residual seen is returned with `converged = false`.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    precond: &Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome, SparseError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(SparseError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(IterativeOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let threshold = tol * b_norm;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut r0 = r.clone();
    let mut r0_sq = dot(&r0, &r0);
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut best = (dot(&r, &r).sqrt(), x.clone());
    let mut iterations = 0;
    let restart_eps = f64::EPSILON * f64::EPSILON;

    while best.0 > threshold && iterations < max_iter {
        let rho_old = rho;
        rho = dot(&r0, &r);
        if rho.abs() < restart_eps * r0_sq {
            // the shadow residual became orthogonal to r: restart from the current iterate
            let ax = a.mul_vec(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            r0.copy_from_slice(&r);
            r0_sq = dot(&r0, &r0);
            rho = r0_sq;
            if rho == 0.0 {
                break;
            }
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            alpha = 1.0;
            omega = 1.0;
        }
        let beta = (rho / rho_old) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        y.copy_from_slice(&p);
        precond.apply(&mut y);
        a.mul_vec_into(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        z.copy_from_slice(&s);
        precond.apply(&mut z);
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        iterations += 1;
        let r_norm = dot(&r, &r).sqrt();
        if !r_norm.is_finite() {
            break;
        }
        if r_norm < best.0 {
            best.0 = r_norm;
            best.1.copy_from_slice(&x);
        }
    }
    let solution = best.1;
    let residual = a.residual_norm(&solution, b) / b_norm;
    Ok(IterativeOutcome {
        converged: residual <= tol,
        solution,
        iterations,
        residual,
    })
}
