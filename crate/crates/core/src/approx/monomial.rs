use crate::Point;

/// Which monomials form a polynomial basis.
#[derive(Clone, Debug, PartialEq)]
pub enum MonomialBasis {
    /// All monomials of total degree `<= m`, graded lexicographic order.
    /// `m = -1` is the empty basis.
    TotalDegree(i32),
    /// Constants plus pure powers `x_i^k`, `1 <= k <= m`, ordered by degree then
    /// axis. In 2D with `m = 2` this is `{1, x, y, x^2, y^2}`.
    PurePowers(u32),
    /// Explicit exponent lists; each entry must have one exponent per dimension.
    Explicit(Vec<Vec<u32>>),
}

impl MonomialBasis {
    /// Exponent multi-indices of the basis in dimension `D`.
    pub fn exponents<const D: usize>(&self) -> Vec<[u32; D]> {
        match self {
            MonomialBasis::TotalDegree(m) => {
                let mut out = Vec::new();
                for deg in 0..=(*m).max(-1) {
                    push_graded_lex(deg as u32, &mut [0; D], 0, &mut out);
                }
                out
            }
            MonomialBasis::PurePowers(m) => {
                let mut out = vec![[0; D]];
                for k in 1..=*m {
                    for axis in 0..D {
                        let mut e = [0; D];
                        e[axis] = k;
                        out.push(e);
                    }
                }
                out
            }
            MonomialBasis::Explicit(list) => list
                .iter()
                .map(|e| std::array::from_fn(|i| e.get(i).copied().unwrap_or(0)))
                .collect(),
        }
    }

    pub fn size<const D: usize>(&self) -> usize {
        self.exponents::<D>().len()
    }
}

/// Enumerates exponents of total degree `remaining + sum(prefix)` in
/// lexicographic order with higher powers of earlier axes first
/// (for degree 2 in 2D: x^2, xy, y^2).
fn push_graded_lex<const D: usize>(remaining: u32, e: &mut [u32; D], axis: usize, out: &mut Vec<[u32; D]>) {
    if D == 0 {
        if remaining == 0 {
            out.push(*e);
        }
        return;
    }
    if axis == D - 1 {
        e[axis] = remaining;
        out.push(*e);
        e[axis] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        e[axis] = k;
        push_graded_lex(remaining - k, e, axis + 1, out);
    }
    e[axis] = 0;
}

/// `C(m + d, d)`: number of monomials of total degree `<= m` in `d` variables.
pub fn polynomial_space_dim(m: i32, d: usize) -> usize {
    if m < 0 {
        return 0;
    }
    let m = m as usize;
    // C(m + d, d) computed incrementally, exact in integers
    (1..=d).fold(1usize, |acc, k| acc * (m + k) / k)
}

/// Partial derivative `d^|alpha| / dx^alpha` of the monomial `x^exps` at `x`.
pub fn monomial_derivative<const D: usize>(exps: &[u32; D], alpha: &[u32; D], x: &Point<D>) -> f64 {
    let mut value = 1.0;
    for i in 0..D {
        let (e, a) = (exps[i], alpha[i]);
        if a > e {
            return 0.0;
        }
        let mut coef = 1.0;
        for k in 0..a {
            coef *= (e - k) as f64;
        }
        value *= coef * x[i].powi((e - a) as i32);
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let e = MonomialBasis::TotalDegree(2).exponents::<2>();
        assert_eq!(e, vec![[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]);
        assert_eq!(MonomialBasis::TotalDegree(-1).size::<3>(), 0);
        assert_eq!(
            MonomialBasis::PurePowers(2).exponents::<2>(),
            vec![[0, 0], [1, 0], [0, 1], [2, 0], [0, 2]]
        );
    }

    #[test]
    fn sizes_match_binomial() {
        for m in 0..5 {
            assert_eq!(MonomialBasis::TotalDegree(m).size::<1>(), polynomial_space_dim(m, 1));
            assert_eq!(MonomialBasis::TotalDegree(m).size::<2>(), polynomial_space_dim(m, 2));
            assert_eq!(MonomialBasis::TotalDegree(m).size::<3>(), polynomial_space_dim(m, 3));
        }
        assert_eq!(polynomial_space_dim(2, 3), 10);
        assert_eq!(polynomial_space_dim(2, 2), 6);
    }

    #[test]
    fn derivatives() {
        let x = Point::<2>::new(1.5, -2.0);
        // d^2/dx^2 x^2 = 2
        assert_eq!(monomial_derivative(&[2, 0], &[2, 0], &x), 2.0);
        // d/dy x y^3 = 3 x y^2
        assert_eq!(monomial_derivative(&[1, 3], &[0, 1], &x), 3.0 * 1.5 * 4.0);
        assert_eq!(monomial_derivative(&[1, 0], &[2, 0], &x), 0.0);
        assert_eq!(monomial_derivative(&[0, 0], &[0, 0], &Point::<2>::zeros()), 1.0);
    }
}
