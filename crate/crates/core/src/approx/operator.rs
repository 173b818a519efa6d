use std::fmt;
use std::sync::Arc;

use crate::Point;

use super::monomial::monomial_derivative;
use super::{ApproxError, Rbf};

/// A linear differential operator of order at most two, or a user-defined one.
#[derive(Clone, Debug)]
pub enum Operator<const D: usize> {
    Identity,
    Derivative(usize),
    SecondDerivative(usize, usize),
    Laplacian,
    /// Derivative along a (nonzero, not necessarily unit) vector.
    Directional(Point<D>),
    /// `sum c_k L_k`; terms must not themselves be combinations.
    Combination(Vec<(f64, Operator<D>)>),
    Custom(Arc<dyn CustomOperator<D>>),
}

/// A user-supplied operator. It must know how to act on the basis functions of
/// the engines it is used with.
pub trait CustomOperator<const D: usize>: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    /// Differential order, used to undo coordinate scaling (`s^-order`).
    fn order(&self) -> u32;
    /// Value of the operator applied to the monomial `x^exponents` at `x`.
    fn apply_monomial(&self, exponents: &[u32; D], x: &Point<D>) -> f64;
    /// Value of the operator applied to `phi(|y|)` at `y = offset`.
    fn apply_radial(&self, rbf: &Rbf, offset: &Point<D>) -> Result<f64, ApproxError>;
}

/// One basis function, in the coordinates of the local approximation.
#[derive(Clone, Copy, Debug)]
pub enum BasisElement<'a, const D: usize> {
    Monomial(&'a [u32; D]),
    /// `phi(|x - center|)`.
    Radial {
        rbf: Rbf,
        center: Point<D>,
    },
}

impl<const D: usize> Operator<D> {
    pub fn combination(terms: Vec<(f64, Operator<D>)>) -> Result<Self, ApproxError> {
        let op = Operator::Combination(terms);
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<(), ApproxError> {
        let bad_axis = |a: usize| {
            Err(ApproxError::InvalidOperator(format!(
                "axis {a} out of range for dimension {D}"
            )))
        };
        match self {
            Operator::Derivative(a) if *a >= D => bad_axis(*a),
            Operator::SecondDerivative(a, b) if *a >= D || *b >= D => bad_axis((*a).max(*b)),
            Operator::Directional(v) if !(v.norm() > 0.0) => Err(ApproxError::InvalidOperator(
                "directional derivative needs a nonzero vector".into(),
            )),
            Operator::Combination(terms) => {
                for (c, t) in terms {
                    if matches!(t, Operator::Combination(_)) {
                        return Err(ApproxError::InvalidOperator(
                            "nested operator combinations are not supported".into(),
                        ));
                    }
                    if !c.is_finite() {
                        return Err(ApproxError::InvalidOperator(format!(
                            "non-finite coefficient {c} in operator combination"
                        )));
                    }
                    t.validate()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Differential order, `None` for combinations (their terms may differ).
    pub fn order(&self) -> Option<u32> {
        match self {
            Operator::Identity => Some(0),
            Operator::Derivative(_) | Operator::Directional(_) => Some(1),
            Operator::SecondDerivative(..) | Operator::Laplacian => Some(2),
            Operator::Combination(_) => None,
            Operator::Custom(c) => Some(c.order()),
        }
    }
}

fn unit<const D: usize>(a: usize) -> [u32; D] {
    let mut e = [0; D];
    e[a] += 1;
    e
}

/// Applies `op` to a basis function at `x`, where the basis lives in coordinates
/// `(p - p*) / scale`; the result is the derivative with respect to physical
/// coordinates `p`, i.e. includes the factor `scale^-order`.
pub fn apply_operator_to_basis<const D: usize>(
    op: &Operator<D>,
    element: &BasisElement<'_, D>,
    x: &Point<D>,
    scale: f64,
) -> Result<f64, ApproxError> {
    let raw = match (op, element) {
        (Operator::Combination(terms), _) => {
            let mut total = 0.0;
            for (c, t) in terms {
                total += c * apply_operator_to_basis(t, element, x, scale)?;
            }
            return Ok(total);
        }
        (Operator::Identity, BasisElement::Monomial(e)) => monomial_derivative(e, &[0; D], x),
        (Operator::Identity, BasisElement::Radial { rbf, center }) => rbf.value((x - center).norm()),
        (Operator::Derivative(a), BasisElement::Monomial(e)) => monomial_derivative(e, &unit(*a), x),
        (Operator::Derivative(a), BasisElement::Radial { rbf, center }) => rbf.derivative(&(x - center), *a)?,
        (Operator::SecondDerivative(a, b), BasisElement::Monomial(e)) => {
            let mut alpha = unit::<D>(*a);
            alpha[*b] += 1;
            monomial_derivative(e, &alpha, x)
        }
        (Operator::SecondDerivative(a, b), BasisElement::Radial { rbf, center }) => {
            rbf.second_derivative(&(x - center), *a, *b)?
        }
        (Operator::Laplacian, BasisElement::Monomial(e)) => (0..D)
            .map(|a| monomial_derivative(e, &unit::<D>(a).map(|k| 2 * k), x))
            .sum(),
        (Operator::Laplacian, BasisElement::Radial { rbf, center }) => rbf.laplacian(&(x - center))?,
        (Operator::Directional(v), _) => {
            let mut total = 0.0;
            for a in 0..D {
                if v[a] != 0.0 {
                    total += v[a] * apply_operator_to_basis(&Operator::Derivative(a), element, x, 1.0)?;
                }
            }
            total
        }
        (Operator::Custom(c), BasisElement::Monomial(e)) => c.apply_monomial(e, x),
        (Operator::Custom(c), BasisElement::Radial { rbf, center }) => c.apply_radial(rbf, &(x - center))?,
    };
    let order = op.order().unwrap_or(0);
    Ok(if order == 0 {
        raw
    } else {
        raw / scale.powi(order as i32)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_x_squared() {
        let e = [2u32, 0];
        for p in [Point::<2>::new(0.3, 7.0), Point::<2>::new(-4.0, 0.0)] {
            let v = apply_operator_to_basis(&Operator::Laplacian, &BasisElement::Monomial(&e), &p, 1.0).unwrap();
            assert_eq!(v, 2.0);
        }
    }

    #[test]
    fn laplacian_of_cubic_polyharmonic() {
        let el = BasisElement::Radial {
            rbf: Rbf::Polyharmonic(3),
            center: Point::<2>::zeros(),
        };
        let v = apply_operator_to_basis(&Operator::Laplacian, &el, &Point::<2>::new(0.0, 2.0), 1.0).unwrap();
        assert!((v - 18.0).abs() < 1e-12);
        let lin = BasisElement::Radial {
            rbf: Rbf::Polyharmonic(1),
            center: Point::<2>::zeros(),
        };
        assert!(apply_operator_to_basis(&Operator::Laplacian, &lin, &Point::<2>::zeros(), 1.0).is_err());
    }

    #[test]
    fn gaussian_at_zero() {
        let el = BasisElement::Radial {
            rbf: Rbf::Gaussian(0.3),
            center: Point::<3>::zeros(),
        };
        let v = apply_operator_to_basis(&Operator::Identity, &el, &Point::<3>::zeros(), 1.0).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn scaling_and_combination() {
        let e = [2u32, 1];
        let x = Point::<2>::new(0.5, 2.0);
        let s = 0.1;
        // d/dx (x^2 y) = 2xy, scaled by 1/s
        let d = apply_operator_to_basis(&Operator::Derivative(0), &BasisElement::Monomial(&e), &x, s).unwrap();
        assert!((d - 2.0 * 0.5 * 2.0 / s).abs() < 1e-12);
        let combo = Operator::combination(vec![(3.0, Operator::Identity), (-2.0, Operator::Derivative(0))]).unwrap();
        let c = apply_operator_to_basis(&combo, &BasisElement::Monomial(&e), &x, s).unwrap();
        assert!((c - (3.0 * 0.5 - 2.0 * d)).abs() < 1e-12);
        let dir = apply_operator_to_basis(
            &Operator::Directional(Point::<2>::new(0.0, 2.0)),
            &BasisElement::Monomial(&e),
            &x,
            s,
        )
        .unwrap();
        assert!((dir - 2.0 * 0.25 / s).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(Operator::<2>::Derivative(2).validate().is_err());
        assert!(Operator::<2>::Directional(Point::<2>::zeros()).validate().is_err());
        assert!(
            Operator::<2>::combination(vec![(1.0, Operator::Combination(vec![(1.0, Operator::Laplacian)]))]).is_err()
        );
    }
}
