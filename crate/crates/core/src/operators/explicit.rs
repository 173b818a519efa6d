use crate::approx::Operator;
use crate::Point;

use super::{Family, OperatorError, ShapeStorage};

/// Below this relative size the node's own normal-derivative weight cannot be
/// divided by.
const NEUMANN_PIVOT_TOLERANCE: f64 = 1e-12;

impl<const D: usize> ShapeStorage<D> {
    fn check_field(&self, len: usize) -> Result<(), OperatorError> {
        if len != self.size() {
            return Err(OperatorError::FieldLength {
                expected: self.size(),
                actual: len,
            });
        }
        Ok(())
    }

    /// `sum_j w_j value(I_j)`, summed in stencil order.
    fn contract(&self, family: &Family, i: usize, value: impl Fn(usize) -> f64) -> Result<f64, OperatorError> {
        let w = self.weights(family, i)?;
        let mut s = 0.0;
        for (wj, &j) in w.iter().zip(self.stencil(i)) {
            s += wj * value(j);
        }
        Ok(s)
    }

    /// Stored operator `family` applied to `u` at node `i`.
    pub fn apply(&self, family: &Family, u: &[f64], i: usize) -> Result<f64, OperatorError> {
        self.check_field(u.len())?;
        self.contract(family, i, |j| u[j])
    }

    pub fn lap(&self, u: &[f64], i: usize) -> Result<f64, OperatorError> {
        self.apply(&Family::Laplacian, u, i)
    }

    pub fn d1(&self, u: &[f64], axis: usize, i: usize) -> Result<f64, OperatorError> {
        self.apply(&Family::D1(axis), u, i)
    }

    pub fn d2(&self, u: &[f64], a: usize, b: usize, i: usize) -> Result<f64, OperatorError> {
        self.apply(&Family::d2(a, b), u, i)
    }

    /// `sum_k c_k (L_k u)(p_i)` with coefficients already evaluated at `p_i`.
    pub fn apply_combination(&self, terms: &[(f64, Family)], u: &[f64], i: usize) -> Result<f64, OperatorError> {
        let mut s = 0.0;
        for (c, f) in terms {
            s += c * self.apply(f, u, i)?;
        }
        Ok(s)
    }

    /// Evaluates an [`Operator`] from the stored families. Directional derivatives
    /// and combinations are expanded into first-derivative and constituent
    /// families; custom operators are looked up by name.
    pub fn apply_operator(&self, op: &Operator<D>, u: &[f64], i: usize) -> Result<f64, OperatorError> {
        match op {
            Operator::Identity => self.apply(&Family::Identity, u, i),
            Operator::Derivative(a) => self.d1(u, *a, i),
            Operator::SecondDerivative(a, b) => self.d2(u, *a, *b, i),
            Operator::Laplacian => self.lap(u, i),
            Operator::Directional(v) => self.directional(u, v, i),
            Operator::Combination(terms) => {
                let mut s = 0.0;
                for (c, t) in terms {
                    s += c * self.apply_operator(t, u, i)?;
                }
                Ok(s)
            }
            Operator::Custom(c) => self.apply(&Family::Custom(c.name().to_string()), u, i),
        }
    }

    pub fn gradient(&self, u: &[f64], i: usize) -> Result<Point<D>, OperatorError> {
        let mut g = Point::<D>::zeros();
        for a in 0..D {
            g[a] = self.d1(u, a, i)?;
        }
        Ok(g)
    }

    /// `v . grad u`; zero components of `v` are skipped, so a coordinate
    /// direction gives exactly the corresponding first derivative.
    pub fn directional(&self, u: &[f64], v: &Point<D>, i: usize) -> Result<f64, OperatorError> {
        let mut s = 0.0;
        for a in 0..D {
            if v[a] != 0.0 {
                s += v[a] * self.d1(u, a, i)?;
            }
        }
        Ok(s)
    }

    pub fn divergence(&self, u: &[Point<D>], i: usize) -> Result<f64, OperatorError> {
        self.check_field(u.len())?;
        (0..D).map(|a| self.contract(&Family::D1(a), i, |j| u[j][a])).sum()
    }

    pub fn vector_laplacian(&self, u: &[Point<D>], i: usize) -> Result<Point<D>, OperatorError> {
        self.check_field(u.len())?;
        let mut out = Point::<D>::zeros();
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.contract(&Family::Laplacian, i, |j| u[j][a])?;
        }
        Ok(out)
    }

    /// `grad (div u)`, component `k` being `sum_l d_k d_l u_l`.
    #[allow(clippy::needless_range_loop)]
    pub fn grad_div(&self, u: &[Point<D>], i: usize) -> Result<Point<D>, OperatorError> {
        self.check_field(u.len())?;
        let mut out = Point::<D>::zeros();
        for (k, o) in out.iter_mut().enumerate() {
            for l in 0..D {
                *o += self.contract(&Family::d2(k, l), i, |j| u[j][l])?;
            }
        }
        Ok(out)
    }

    /// Weights of the discrete normal derivative `sum_l n_l w_{d_l}` at node `i`.
    pub fn normal_derivative_weights(&self, normal: &Point<D>, i: usize) -> Result<Vec<f64>, OperatorError> {
        let mut c = vec![0.0; self.stencil(i).len()];
        for l in 0..D {
            let w = self.weights(&Family::D1(l), i)?;
            for (cj, wj) in c.iter_mut().zip(w) {
                *cj += normal[l] * wj;
            }
        }
        Ok(c)
    }

    /// The value at boundary node `i` that makes the discrete normal derivative
    /// of `u` equal `g_n`, given the values of `u` at the other stencil nodes.
    pub fn neumann(&self, u: &[f64], i: usize, normal: &Point<D>, g_n: f64) -> Result<f64, OperatorError> {
        self.check_field(u.len())?;
        let c = self.normal_derivative_weights(normal, i)?;
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(c[0].abs() >= NEUMANN_PIVOT_TOLERANCE * norm) || c[0] == 0.0 {
            return Err(OperatorError::IllPosedNeumann { node: i, weight: c[0] });
        }
        let mut s = g_n;
        for (cj, &j) in c.iter().zip(self.stencil(i)).skip(1) {
            s -= cj * u[j];
        }
        Ok(s / c[0])
    }
}
