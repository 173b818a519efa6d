//! Constructive solid geometry over balls and axis-aligned boxes.

use crate::{Matrix, Point};

use super::GeometryError;

/// Default type tag given to boundary nodes of primitives.
pub const DEFAULT_BOUNDARY_TYPE: i32 = -1;

/// A closed, bounded subset of `R^D` built from primitives.
///
/// Primitives carry the (negative) type tag assigned to the boundary nodes they
/// contribute; composites keep the tag of the contributing primitive so boundary
/// parts can be told apart after discretization.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape<const D: usize> {
    Ball {
        center: Point<D>,
        radius: f64,
        boundary_type: i32,
    },
    Box {
        lo: Point<D>,
        hi: Point<D>,
        boundary_type: i32,
    },
    Union(Box<Shape<D>>, Box<Shape<D>>),
    /// Points of the first shape that are not in the open interior of the second.
    Difference(Box<Shape<D>>, Box<Shape<D>>),
    Translate(Box<Shape<D>>, Point<D>),
    /// Image of the inner shape under an orthogonal map about the origin.
    Rotate(Box<Shape<D>>, Matrix<D>),
}

impl<const D: usize> Shape<D> {
    pub fn ball(center: Point<D>, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) || !center.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidShape(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Shape::Ball {
            center,
            radius,
            boundary_type: DEFAULT_BOUNDARY_TYPE,
        })
    }

    pub fn cuboid(lo: Point<D>, hi: Point<D>) -> Result<Self, GeometryError> {
        if !(0..D).all(|i| lo[i] < hi[i] && lo[i].is_finite() && hi[i].is_finite()) {
            return Err(GeometryError::InvalidShape(format!(
                "box corners must satisfy lo < hi componentwise, got lo = {:?}, hi = {:?}",
                lo.as_slice(),
                hi.as_slice()
            )));
        }
        Ok(Shape::Box {
            lo,
            hi,
            boundary_type: DEFAULT_BOUNDARY_TYPE,
        })
    }

    pub fn union(self, other: Shape<D>) -> Self {
        Shape::Union(Box::new(self), Box::new(other))
    }

    pub fn difference(self, other: Shape<D>) -> Self {
        Shape::Difference(Box::new(self), Box::new(other))
    }

    pub fn translate(self, offset: Point<D>) -> Self {
        Shape::Translate(Box::new(self), offset)
    }

    /// Rotates the shape by an orthogonal matrix. Non-orthogonal maps are rejected.
    pub fn rotate(self, rotation: Matrix<D>) -> Result<Self, GeometryError> {
        let defect = (rotation.transpose() * rotation - Matrix::<D>::identity()).amax();
        if !(defect <= 1e-10) {
            return Err(GeometryError::InvalidShape(format!(
                "rotation matrix is not orthogonal (|R^T R - I|_max = {defect:e})"
            )));
        }
        Ok(Shape::Rotate(Box::new(self), rotation))
    }

    /// Sets the boundary type of every primitive in the shape.
    pub fn with_boundary_type(mut self, tag: i32) -> Result<Self, GeometryError> {
        if tag >= 0 {
            return Err(GeometryError::InvalidTag(tag));
        }
        self.set_boundary_type(tag);
        Ok(self)
    }

    fn set_boundary_type(&mut self, tag: i32) {
        match self {
            Shape::Ball { boundary_type, .. } | Shape::Box { boundary_type, .. } => *boundary_type = tag,
            Shape::Union(a, b) | Shape::Difference(a, b) => {
                a.set_boundary_type(tag);
                b.set_boundary_type(tag);
            }
            Shape::Translate(s, _) | Shape::Rotate(s, _) => s.set_boundary_type(tag),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, p: &Point<D>) -> bool {
        self.includes(p, 0.0, false)
    }

    /// Open-interior membership.
    pub fn contains_strictly(&self, p: &Point<D>) -> bool {
        self.includes(p, 0.0, true)
    }

    /// Membership in the shape grown by `margin` (shrunk when negative); `strict`
    /// selects the open version of the set.
    pub fn includes(&self, p: &Point<D>, margin: f64, strict: bool) -> bool {
        let le = |a: f64, b: f64| if strict { a < b } else { a <= b };
        match self {
            Shape::Ball { center, radius, .. } => le((p - center).norm(), radius + margin),
            Shape::Box { lo, hi, .. } => (0..D).all(|i| le(lo[i] - margin, p[i]) && le(p[i], hi[i] + margin)),
            Shape::Union(a, b) => a.includes(p, margin, strict) || b.includes(p, margin, strict),
            Shape::Difference(a, b) => a.includes(p, margin, strict) && !b.includes(p, -margin, !strict),
            Shape::Translate(s, offset) => s.includes(&(p - offset), margin, strict),
            Shape::Rotate(s, rot) => s.includes(&(rot.transpose() * p), margin, strict),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bbox(&self) -> (Point<D>, Point<D>) {
        match self {
            Shape::Ball { center, radius, .. } => (center.add_scalar(-radius), center.add_scalar(*radius)),
            Shape::Box { lo, hi, .. } => (*lo, *hi),
            Shape::Union(a, b) => {
                let (alo, ahi) = a.bbox();
                let (blo, bhi) = b.bbox();
                (alo.inf(&blo), ahi.sup(&bhi))
            }
            Shape::Difference(a, _) => a.bbox(),
            Shape::Translate(s, offset) => {
                let (lo, hi) = s.bbox();
                (lo + offset, hi + offset)
            }
            Shape::Rotate(s, rot) => {
                let (lo, hi) = s.bbox();
                let mut out_lo = Point::<D>::repeat(f64::INFINITY);
                let mut out_hi = Point::<D>::repeat(f64::NEG_INFINITY);
                for mask in 0..(1usize << D) {
                    let corner = Point::<D>::from_fn(|i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] });
                    let c = rot * corner;
                    out_lo = out_lo.inf(&c);
                    out_hi = out_hi.sup(&c);
                }
                (out_lo, out_hi)
            }
        }
    }

    /// Length of the bounding box diagonal, used to scale geometric tolerances.
    pub fn characteristic_length(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }
}
