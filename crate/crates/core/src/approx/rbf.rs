use crate::Point;

use super::ApproxError;

/// Radial basis function profile `phi(r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rbf {
    /// `exp(-(r / sigma)^2)`
    Gaussian(f64),
    /// `sqrt(1 + (r / sigma)^2)`
    Multiquadric(f64),
    /// `1 / sqrt(1 + (r / sigma)^2)`
    InverseMultiquadric(f64),
    /// `r^k` for odd `k`, `r^k log r` for even `k`.
    Polyharmonic(u32),
}

/// Radial profile and the two smooth helper functions
/// `f1 = phi'(r) / r` and `f2 = (phi''(r) - phi'(r) / r) / r^2`, in terms of which
/// `d_i phi = f1 x_i` and `d_i d_j phi = f2 x_i x_j + f1 delta_ij`.
#[derive(Clone, Copy, Debug)]
struct Profile {
    phi: f64,
    f1: f64,
    f2: f64,
}

impl Rbf {
    pub fn validate(&self) -> Result<(), ApproxError> {
        match *self {
            Rbf::Gaussian(s) | Rbf::Multiquadric(s) | Rbf::InverseMultiquadric(s) if !(s > 0.0 && s.is_finite()) => {
                Err(ApproxError::InvalidParameter(format!(
                    "RBF shape parameter must be positive, got {s}"
                )))
            }
            Rbf::Polyharmonic(0) => Err(ApproxError::InvalidParameter(
                "polyharmonic exponent must be positive".into(),
            )),
            _ => Ok(()),
        }
    }

    /// `phi(r)`, with the continuous extension at `r = 0`.
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Rbf::Polyharmonic(k) => {
                if r == 0.0 {
                    0.0
                } else if k % 2 == 1 {
                    r.powi(k as i32)
                } else {
                    r.powi(k as i32) * r.ln()
                }
            }
            _ => self.profile(r).phi,
        }
    }

    fn profile(&self, r: f64) -> Profile {
        match *self {
            Rbf::Gaussian(s) => {
                let s2 = s * s;
                let phi = (-r * r / s2).exp();
                Profile {
                    phi,
                    f1: -2.0 / s2 * phi,
                    f2: 4.0 / (s2 * s2) * phi,
                }
            }
            Rbf::Multiquadric(s) => {
                let s2 = s * s;
                let phi = (1.0 + r * r / s2).sqrt();
                Profile {
                    phi,
                    f1: 1.0 / (s2 * phi),
                    f2: -1.0 / (s2 * s2 * phi * phi * phi),
                }
            }
            Rbf::InverseMultiquadric(s) => {
                let s2 = s * s;
                let psi = 1.0 + r * r / s2;
                let phi = 1.0 / psi.sqrt();
                Profile {
                    phi,
                    f1: -phi / (psi * s2),
                    f2: 3.0 * phi / (psi * psi * s2 * s2),
                }
            }
            Rbf::Polyharmonic(k) => {
                let kf = k as f64;
                let ki = k as i32;
                if k % 2 == 1 {
                    Profile {
                        phi: r.powi(ki),
                        f1: kf * r.powi(ki - 2),
                        f2: kf * (kf - 2.0) * r.powi(ki - 4),
                    }
                } else {
                    let l = r.ln();
                    Profile {
                        phi: r.powi(ki) * l,
                        f1: r.powi(ki - 2) * (kf * l + 1.0),
                        f2: r.powi(ki - 4) * (kf * (kf - 2.0) * l + 2.0 * kf - 2.0),
                    }
                }
            }
        }
    }

    /// Whether derivatives of the given order exist at `r = 0`; if so they vanish
    /// for polyharmonics (odd symmetric profile terms).
    fn polyharmonic_smooth_at_zero(k: u32, order: u32) -> bool {
        match order {
            0 => true,
            1 => k >= 2,
            _ => {
                if k % 2 == 1 {
                    k >= 3
                } else {
                    k >= 4
                }
            }
        }
    }

    fn at_origin(&self, order: u32) -> Result<Option<Profile>, ApproxError> {
        match *self {
            Rbf::Polyharmonic(k) => {
                if Self::polyharmonic_smooth_at_zero(k, order) {
                    Ok(Some(Profile {
                        phi: 0.0,
                        f1: 0.0,
                        f2: 0.0,
                    }))
                } else {
                    Err(ApproxError::Singular(format!(
                        "derivative of order {order} of polyharmonic r^{k} does not exist at r = 0"
                    )))
                }
            }
            _ => Ok(None),
        }
    }

    /// `d_axis phi(|x|)`.
    pub fn derivative<const D: usize>(&self, x: &Point<D>, axis: usize) -> Result<f64, ApproxError> {
        let r = x.norm();
        if r == 0.0 {
            if let Some(p) = self.at_origin(1)? {
                return Ok(p.f1 * x[axis]);
            }
        }
        Ok(self.profile(r).f1 * x[axis])
    }

    /// `d_a d_b phi(|x|)`.
    pub fn second_derivative<const D: usize>(&self, x: &Point<D>, a: usize, b: usize) -> Result<f64, ApproxError> {
        let r = x.norm();
        let p = if r == 0.0 {
            match self.at_origin(2)? {
                Some(p) => p,
                None => self.profile(r),
            }
        } else {
            self.profile(r)
        };
        let delta = if a == b { 1.0 } else { 0.0 };
        Ok(p.f2 * x[a] * x[b] + p.f1 * delta)
    }

    /// `Laplacian phi(|x|)` in `D` dimensions.
    pub fn laplacian<const D: usize>(&self, x: &Point<D>) -> Result<f64, ApproxError> {
        let r = x.norm();
        let p = if r == 0.0 {
            match self.at_origin(2)? {
                Some(p) => p,
                None => self.profile(r),
            }
        } else {
            self.profile(r)
        };
        Ok(p.f2 * r * r + D as f64 * p.f1)
    }
}
