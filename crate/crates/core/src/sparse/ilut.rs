use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{CsrMatrix, SparseError};

/// Incomplete LU factorization with threshold dropping (dual threshold ILUT).
///
/// Follows the conventions of Eigen's `IncompleteLUT`: each row keeps at most
/// `p = fill * nnz(A) / N + 1` entries split evenly between `L` and `U`;
/// multipliers with `|l_ik| <= drop` are discarded during elimination, and
/// upper entries smaller than `drop * ||a_i||_2` are discarded afterwards. A zero
/// pivot is replaced by `sqrt(drop) * ||a_i||_2`. No fill-reducing reordering
/// is applied.
#[derive(Debug, Clone)]
pub struct Ilut {
    lower: Vec<Vec<(usize, f64)>>,
    upper: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

/// Keeps the `keep` entries of largest magnitude (ties broken by column), sorted
/// by column.
fn keep_largest(entries: &mut Vec<(usize, f64)>, keep: usize) {
    if entries.len() > keep {
        entries.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        entries.truncate(keep);
    }
    entries.sort_by_key(|e| e.0);
}

impl Ilut {
    pub fn new(a: &CsrMatrix, fill: usize, drop: f64) -> Result<Self, SparseError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SparseError::NotSquare {
                rows: n,
                cols: a.ncols(),
            });
        }
        if !(drop >= 0.0 && drop.is_finite()) {
            return Err(SparseError::InvalidParameter(format!(
                "drop tolerance must be nonnegative, got {drop}"
            )));
        }
        let per_row = (a.nnz() * fill).checked_div(n).map_or(0, |q| (q + 1).min(n));
        let keep_l = per_row / 2;
        let keep_u = keep_l;

        let mut lower = Vec::with_capacity(n);
        let mut upper: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut diag: Vec<f64> = Vec::with_capacity(n);

        let mut work = vec![0.0; n];
        let mut marked = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut pending: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

        for i in 0..n {
            let (cols, vals) = a.row(i);
            let rownorm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rownorm == 0.0 {
                return Err(SparseError::EmptyRow { row: i });
            }
            marked[i] = true;
            touched.push(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if !marked[c] {
                    marked[c] = true;
                    touched.push(c);
                    if c < i {
                        pending.push(Reverse(c));
                    }
                }
                work[c] += v;
            }

            let mut row_l = Vec::new();
            while let Some(Reverse(k)) = pending.pop() {
                let fact = work[k] / diag[k];
                work[k] = 0.0;
                if fact.abs() <= drop {
                    continue;
                }
                for &(j, ukj) in &upper[k] {
                    if !marked[j] {
                        marked[j] = true;
                        touched.push(j);
                        if j < i {
                            pending.push(Reverse(j));
                        }
                    }
                    work[j] -= fact * ukj;
                }
                row_l.push((k, fact));
            }
            keep_largest(&mut row_l, keep_l);

            let mut d = work[i];
            if d == 0.0 {
                d = drop.sqrt() * rownorm;
            }
            let mut row_u: Vec<(usize, f64)> = touched
                .iter()
                .filter(|&&j| j > i && work[j].abs() > drop * rownorm)
                .map(|&j| (j, work[j]))
                .collect();
            keep_largest(&mut row_u, keep_u.saturating_sub(1));

            for &j in &touched {
                work[j] = 0.0;
                marked[j] = false;
            }
            touched.clear();

            if !d.is_finite() || d == 0.0 {
                return Err(SparseError::EmptyRow { row: i });
            }
            lower.push(row_l);
            upper.push(row_u);
            diag.push(d);
        }
        Ok(Ilut { lower, upper, diag })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Number of stored entries in `L + U` (diagonal included once).
    pub fn nnz(&self) -> usize {
        self.diag.len()
            + self.lower.iter().map(Vec::len).sum::<usize>()
            + self.upper.iter().map(Vec::len).sum::<usize>()
    }

    /// Overwrites `x` with `(LU)^-1 x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.size(), "preconditioner dimension mismatch");
        for i in 0..x.len() {
            let mut s = x[i];
            for &(j, l) in &self.lower[i] {
                s -= l * x[j];
            }
            x[i] = s;
        }
        for i in (0..x.len()).rev() {
            let mut s = x[i];
            for &(j, u) in &self.upper[i] {
                s -= u * x[j];
            }
            x[i] = s / self.diag[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> CsrMatrix {
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let mut r = vec![(i, 4.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -2.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(n, &rows).unwrap()
    }

    #[test]
    fn exact_on_tridiagonal() {
        // no fill-in arises, so with zero drop tolerance the factorization is exact
        let a = tridiagonal(20);
        let ilu = Ilut::new(&a, 5, 0.0).unwrap();
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = a.mul_vec(&x);
        ilu.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn approximate_inverse_for_dense() {
        // per_row is capped at N, so a dense matrix keeps only half of each
        // triangle and the factorization is approximate
        let n = 6;
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (j, if i == j { 10.0 } else { ((i * 3 + j) as f64).cos() }))
                    .collect()
            })
            .collect();
        let a = CsrMatrix::from_rows(n, &rows).unwrap();
        let ilu = Ilut::new(&a, 10, 0.0).unwrap();
        let x = vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let mut b = a.mul_vec(&x);
        ilu.solve_in_place(&mut b);
        let err: f64 = b.iter().zip(&x).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 0.1 * norm, "{err}");
    }

    #[test]
    fn fill_budget_and_errors() {
        let a = tridiagonal(50);
        let ilu = Ilut::new(&a, 1, 1e-2).unwrap();
        // nnz/N < 3, so per_row = 3 and each row keeps one L and no U entry
        assert!(ilu.lower.iter().all(|r| r.len() <= 1));
        assert!(ilu.upper.iter().all(|r| r.is_empty()));
        let empty = CsrMatrix::from_rows(2, &[vec![(0, 1.0)], vec![]]).unwrap();
        assert_eq!(
            Ilut::new(&empty, 5, 1e-2).unwrap_err(),
            SparseError::EmptyRow { row: 1 }
        );
        // a zero pivot is shifted rather than rejected
        let z = CsrMatrix::from_rows(2, &[vec![(0, 0.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]).unwrap();
        assert!(Ilut::new(&z, 5, 1e-2).is_ok());
    }
}
