//! Advancing-front Poisson-disk style interior fill.
//!
//! Every accepted node spawns candidates on a sphere of radius `h(p)` around
//! itself; a candidate is accepted when it lies strictly inside the shape and no
//! existing node is closer than `MIN_DISTANCE_FACTOR * h(candidate)`. Nodes are
//! expanded in FIFO order starting from the seeds, so the output is a pure
//! function of the inputs and the RNG seed.

use std::collections::VecDeque;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Point;

use super::grid::SpatialGrid;
use super::{DomainDiscretization, GeometryError, Shape, Spacing};

/// Minimal allowed distance between nodes, relative to the local spacing.
pub const MIN_DISTANCE_FACTOR: f64 = 0.75;

/// Number of candidates generated around each expanded node.
pub const CANDIDATES_PER_NODE: usize = 15;

/// Default type of generated interior nodes.
const INTERIOR_TYPE: i32 = 1;

/// Fills the interior of `shape`, seeding the front with all nodes already in
/// `domain` (normally its boundary discretization).
pub fn fill_interior<const D: usize>(
    domain: &mut DomainDiscretization<D>,
    shape: &Shape<D>,
    h: &Spacing<D>,
    seed: u64,
) -> Result<(), GeometryError> {
    fill_interior_from(domain, shape, h, seed, &[])
}

/// Like [`fill_interior`], with additional explicit starting points. Starting
/// points that lie strictly inside the shape are inserted as interior nodes.
pub fn fill_interior_from<const D: usize>(
    domain: &mut DomainDiscretization<D>,
    shape: &Shape<D>,
    h: &Spacing<D>,
    seed: u64,
    starts: &[Point<D>],
) -> Result<(), GeometryError> {
    let (lo, hi) = shape.bbox();
    if !(lo.iter().chain(hi.iter()).all(|x| x.is_finite())) {
        return Err(GeometryError::Unbounded);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let existing: Vec<Point<D>> = domain.positions().to_vec();
    let mut seeds = existing.clone();
    let mut inserted_starts = Vec::new();
    for s in starts {
        if shape.contains_strictly(s) {
            seeds.push(*s);
            inserted_starts.push(*s);
        }
    }
    if seeds.is_empty() {
        return Err(GeometryError::EmptySeed);
    }
    let mut all_existing = existing;
    all_existing.extend(inserted_starts.iter().copied());
    let new_nodes = advancing_fill(
        &all_existing,
        &seeds,
        |p| shape.contains_strictly(p),
        sphere_directions::<D>,
        h,
        &mut rng,
    )?;
    for p in inserted_starts.into_iter().chain(new_nodes) {
        domain.add_internal_node(p, INTERIOR_TYPE)?;
    }
    Ok(())
}

/// Core front-advancing loop. `existing` nodes block candidates, `seeds` start
/// the queue, `inside` restricts candidates and `directions` produces unit
/// candidate offsets. Returns the newly accepted nodes in acceptance order.
pub(crate) fn advancing_fill<const D: usize>(
    existing: &[Point<D>],
    seeds: &[Point<D>],
    inside: impl Fn(&Point<D>) -> bool,
    mut directions: impl FnMut(&mut ChaCha8Rng) -> Vec<Point<D>>,
    h: &Spacing<D>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Point<D>>, GeometryError> {
    let mut h_max: f64 = 0.0;
    for p in seeds {
        h_max = h_max.max(h.checked(p)?);
    }
    let mut grid = SpatialGrid::new(MIN_DISTANCE_FACTOR * h_max);
    for p in existing {
        grid.insert(*p);
    }
    let mut queue: VecDeque<Point<D>> = seeds.iter().copied().collect();
    let mut accepted = Vec::new();
    while let Some(p) = queue.pop_front() {
        let hp = h.checked(&p)?;
        for dir in directions(rng) {
            let c = p + dir * hp;
            if !inside(&c) {
                continue;
            }
            let hc = h.checked(&c)?;
            if grid.any_within(&c, MIN_DISTANCE_FACTOR * hc, |_, _| true) {
                continue;
            }
            grid.insert(c);
            accepted.push(c);
            queue.push_back(c);
        }
    }
    Ok(accepted)
}

/// Candidate directions on the unit sphere in `D` dimensions: evenly spread
/// and randomly rotated.
pub(crate) fn sphere_directions<const D: usize>(rng: &mut ChaCha8Rng) -> Vec<Point<D>> {
    match D {
        1 => vec![Point::<D>::repeat(1.0), Point::<D>::repeat(-1.0)],
        2 => circle_directions(rng, |c, s| Point::<D>::from_fn(|i, _| if i == 0 { c } else { s })),
        3 => {
            let rot = random_rotation(rng);
            fibonacci_sphere(CANDIDATES_PER_NODE)
                .into_iter()
                .map(|v| {
                    let r = rot * v;
                    Point::<D>::from_fn(|i, _| r[i])
                })
                .collect()
        }
        _ => (0..CANDIDATES_PER_NODE)
            .map(|_| loop {
                let v = Point::<D>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v / n;
                }
            })
            .collect(),
    }
}

/// `CANDIDATES_PER_NODE` evenly spaced directions in a plane with a random offset.
pub(crate) fn circle_directions<T>(rng: &mut ChaCha8Rng, make: impl Fn(f64, f64) -> T) -> Vec<T> {
    let offset = rng.gen::<f64>() * std::f64::consts::TAU;
    (0..CANDIDATES_PER_NODE)
        .map(|k| {
            let a = offset + std::f64::consts::TAU * k as f64 / CANDIDATES_PER_NODE as f64;
            make(a.cos(), a.sin())
        })
        .collect()
}

/// Uniformly distributed random rotation of 3D space.
pub(crate) fn random_rotation(rng: &mut ChaCha8Rng) -> nalgebra::Rotation3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let q = Quaternion::new(
        (1.0 - u1).sqrt() * (tau * u2).sin(),
        (1.0 - u1).sqrt() * (tau * u2).cos(),
        u1.sqrt() * (tau * u3).sin(),
        u1.sqrt() * (tau * u3).cos(),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// `n` nearly uniformly spread unit vectors (golden-angle spiral).
pub(crate) fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}
