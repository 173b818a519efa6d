//! Boundary discretization of CSG shapes.
//!
//! Curves (circles, box edges) are marched with arc-length step `h`; box faces in
//! 3D are filled with the advancing-front fill restricted to the face plane; spheres
//! use a Fibonacci spiral followed by one relaxation pass. Composite shapes combine
//! the children's nodes, drop the ones that are not on the composite boundary and
//! thin out near-duplicates where two boundaries meet, averaging their normals.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Point;

use super::fill::{advancing_fill, circle_directions, fibonacci_sphere, random_rotation};
use super::grid::SpatialGrid;
use super::{DomainDiscretization, GeometryError, KdTree, Shape, Spacing, MIN_DISTANCE_FACTOR};

#[derive(Clone, Copy, Debug)]
struct BoundaryNode<const D: usize> {
    p: Point<D>,
    normal: Point<D>,
    ty: i32,
}

/// Discretizes the boundary of `shape` with spacing `h`. Every node gets a
/// negative type (that of its primitive) and an outward unit normal.
pub fn discretize_boundary<const D: usize>(
    shape: &Shape<D>,
    h: &Spacing<D>,
    seed: u64,
) -> Result<DomainDiscretization<D>, GeometryError> {
    let (lo, hi) = shape.bbox();
    if !(lo.iter().chain(hi.iter()).all(|x| x.is_finite())) {
        return Err(GeometryError::Unbounded);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-10 * shape.characteristic_length();
    let nodes = boundary_nodes(shape, h, &mut rng, eps)?;
    let mut domain = DomainDiscretization::new();
    for node in nodes {
        domain.add_boundary_node(node.p, node.ty, node.normal)?;
    }
    Ok(domain)
}

fn boundary_nodes<const D: usize>(
    shape: &Shape<D>,
    h: &Spacing<D>,
    rng: &mut ChaCha8Rng,
    eps: f64,
) -> Result<Vec<BoundaryNode<D>>, GeometryError> {
    match shape {
        Shape::Ball {
            center,
            radius,
            boundary_type,
        } => ball_boundary(center, *radius, *boundary_type, h, rng),
        Shape::Box { lo, hi, boundary_type } => box_boundary(lo, hi, *boundary_type, h, rng),
        Shape::Union(a, b) => {
            let na = boundary_nodes(a, h, rng, eps)?;
            let nb = boundary_nodes(b, h, rng, eps)?;
            let mut nodes: Vec<_> = na.into_iter().filter(|n| !b.includes(&n.p, -eps, true)).collect();
            nodes.extend(nb.into_iter().filter(|n| !a.includes(&n.p, -eps, true)));
            thin(nodes, h)
        }
        Shape::Difference(a, b) => {
            let na = boundary_nodes(a, h, rng, eps)?;
            let nb = boundary_nodes(b, h, rng, eps)?;
            let mut nodes: Vec<_> = na.into_iter().filter(|n| !b.includes(&n.p, -eps, true)).collect();
            nodes.extend(
                nb.into_iter()
                    .filter(|n| a.includes(&n.p, eps, false))
                    .map(|n| BoundaryNode { normal: -n.normal, ..n }),
            );
            thin(nodes, h)
        }
        Shape::Translate(s, offset) => {
            let shifted = Spacing::new({
                let h = h.clone();
                let offset = *offset;
                move |p: &Point<D>| h.eval(&(p + offset))
            });
            Ok(boundary_nodes(s, &shifted, rng, eps)?
                .into_iter()
                .map(|n| BoundaryNode { p: n.p + offset, ..n })
                .collect())
        }
        Shape::Rotate(s, rot) => {
            let rotated = Spacing::new({
                let h = h.clone();
                let rot = *rot;
                move |p: &Point<D>| h.eval(&(rot * p))
            });
            Ok(boundary_nodes(s, &rotated, rng, eps)?
                .into_iter()
                .map(|n| BoundaryNode {
                    p: rot * n.p,
                    normal: rot * n.normal,
                    ty: n.ty,
                })
                .collect())
        }
    }
}

/// Greedily drops nodes closer than `MIN_DISTANCE_FACTOR * h` to an already kept
/// node; the kept node's normal is averaged with the dropped one.
fn thin<const D: usize>(nodes: Vec<BoundaryNode<D>>, h: &Spacing<D>) -> Result<Vec<BoundaryNode<D>>, GeometryError> {
    if nodes.is_empty() {
        return Ok(nodes);
    }
    let mut h_max: f64 = 0.0;
    let mut hs = Vec::with_capacity(nodes.len());
    for n in &nodes {
        let hn = h.checked(&n.p)?;
        h_max = h_max.max(hn);
        hs.push(hn);
    }
    let mut grid = SpatialGrid::new(MIN_DISTANCE_FACTOR * h_max);
    let mut kept: Vec<BoundaryNode<D>> = Vec::with_capacity(nodes.len());
    for (node, hn) in nodes.into_iter().zip(hs) {
        let mut clash = None;
        grid.any_within(&node.p, MIN_DISTANCE_FACTOR * hn, |id, _| {
            clash = Some(id);
            true
        });
        match clash {
            Some(id) => {
                let k = &mut kept[id];
                let avg = k.normal + node.normal;
                if avg.norm() > 1e-12 {
                    k.normal = avg.normalize();
                }
            }
            None => {
                grid.insert(node.p);
                kept.push(node);
            }
        }
    }
    Ok(kept)
}

/// Arc-length positions `0 = s_0 < ... < s_k = len` with steps close to `h(s)`.
/// The raw marching is rescaled so that the last step lands on `len`, choosing
/// between shrinking and stretching so that spacings stay within `[0.75, 1.5] h`
/// whenever possible.
fn march(len: f64, h_at: impl Fn(f64) -> Result<f64, GeometryError>) -> Result<Vec<f64>, GeometryError> {
    let mut s = vec![0.0];
    let next = loop {
        let last = *s.last().unwrap();
        let step = h_at(last)?;
        let next = last + step;
        if next >= len {
            break next;
        }
        s.push(next);
    };
    let last = *s.last().unwrap();
    let shrink = len / next;
    let stretch = if s.len() > 1 { len / last } else { f64::INFINITY };
    let use_shrink =
        stretch.is_infinite() || (shrink >= MIN_DISTANCE_FACTOR && (1.0 / shrink <= stretch || stretch > 1.5));
    let mut out: Vec<f64> = if use_shrink {
        s.push(next);
        s.into_iter().map(|x| x * shrink).collect()
    } else {
        s.into_iter().map(|x| x * stretch).collect()
    };
    *out.last_mut().unwrap() = len;
    Ok(out)
}

fn from_slice<const D: usize>(v: &[f64]) -> Point<D> {
    Point::<D>::from_fn(|i, _| v[i])
}

fn ball_boundary<const D: usize>(
    center: &Point<D>,
    radius: f64,
    ty: i32,
    h: &Spacing<D>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BoundaryNode<D>>, GeometryError> {
    match D {
        1 => {
            for p in [center.add_scalar(-radius), center.add_scalar(radius)] {
                h.checked(&p)?;
            }
            Ok(vec![
                BoundaryNode {
                    p: center.add_scalar(-radius),
                    normal: Point::<D>::repeat(-1.0),
                    ty,
                },
                BoundaryNode {
                    p: center.add_scalar(radius),
                    normal: Point::<D>::repeat(1.0),
                    ty,
                },
            ])
        }
        2 => {
            let start = rng.gen::<f64>() * std::f64::consts::TAU;
            let at = |s: f64| {
                let a = start + s / radius;
                from_slice::<D>(&[a.cos(), a.sin()])
            };
            let arcs = march(std::f64::consts::TAU * radius, |s| {
                h.checked(&(center + at(s) * radius))
            })?;
            let n = arcs.len() - 1;
            Ok(arcs[..n]
                .iter()
                .map(|&s| {
                    let dir = at(s);
                    BoundaryNode {
                        p: center + dir * radius,
                        normal: dir,
                        ty,
                    }
                })
                .collect())
        }
        3 => sphere_boundary(center, radius, ty, h, rng),
        _ => Err(GeometryError::Unsupported(format!(
            "ball boundary discretization in {D} dimensions"
        ))),
    }
}

/// Area per node of a hexagonal arrangement with spacing `h` is `sqrt(3)/2 h^2`.
const HEX_AREA_FACTOR: f64 = 0.866_025_403_784_438_6;

fn sphere_boundary<const D: usize>(
    center: &Point<D>,
    radius: f64,
    ty: i32,
    h: &Spacing<D>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BoundaryNode<D>>, GeometryError> {
    let to_point = |v: &Vector3<f64>| center + from_slice::<D>(v.as_slice()) * radius;
    // node count from the mean node density over the sphere
    let probes = fibonacci_sphere(2000);
    let mut density = 0.0;
    for v in &probes {
        let hv = h.checked(&to_point(v))?;
        density += 1.0 / (HEX_AREA_FACTOR * hv * hv);
    }
    density /= probes.len() as f64;
    let area = 4.0 * std::f64::consts::PI * radius * radius;
    let count = ((area * density).round() as usize).max(4);

    let rot = random_rotation(rng);
    let mut dirs: Vec<Vector3<f64>> = fibonacci_sphere(count).into_iter().map(|v| rot * v).collect();

    // one relaxation pass: move each node halfway to the centroid of its closest
    // neighbors and project back onto the sphere
    const NEIGHBORS: usize = 6;
    if count > NEIGHBORS {
        let tree = KdTree::new(&dirs);
        let relaxed: Vec<Vector3<f64>> = dirs
            .iter()
            .map(|v| {
                let near = tree.knn(v, NEIGHBORS + 1);
                let centroid = near.iter().skip(1).map(|(j, _)| dirs[*j]).sum::<Vector3<f64>>() / NEIGHBORS as f64;
                let moved = v + (centroid - v) * 0.5;
                if moved.norm() > 1e-12 {
                    moved.normalize()
                } else {
                    *v
                }
            })
            .collect();
        dirs = relaxed;
    }
    Ok(dirs
        .iter()
        .map(|v| BoundaryNode {
            p: to_point(v),
            normal: from_slice::<D>(v.as_slice()),
            ty,
        })
        .collect())
}

fn box_boundary<const D: usize>(
    lo: &Point<D>,
    hi: &Point<D>,
    ty: i32,
    h: &Spacing<D>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BoundaryNode<D>>, GeometryError> {
    match D {
        1 => {
            h.checked(lo)?;
            h.checked(hi)?;
            Ok(vec![
                BoundaryNode {
                    p: *lo,
                    normal: Point::<D>::repeat(-1.0),
                    ty,
                },
                BoundaryNode {
                    p: *hi,
                    normal: Point::<D>::repeat(1.0),
                    ty,
                },
            ])
        }
        2 => {
            let corners = [
                from_slice::<D>(&[lo[0], lo[1]]),
                from_slice::<D>(&[hi[0], lo[1]]),
                from_slice::<D>(&[hi[0], hi[1]]),
                from_slice::<D>(&[lo[0], hi[1]]),
            ];
            let normals = [
                from_slice::<D>(&[0.0, -1.0]),
                from_slice::<D>(&[1.0, 0.0]),
                from_slice::<D>(&[0.0, 1.0]),
                from_slice::<D>(&[-1.0, 0.0]),
            ];
            let mut out = Vec::new();
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                let corner_normal = (normals[k] + normals[(k + 3) % 4]).normalize();
                let len = (b - a).norm();
                let dir = (b - a) / len;
                let arcs = march(len, |s| h.checked(&(a + dir * s)))?;
                out.push(BoundaryNode {
                    p: a,
                    normal: corner_normal,
                    ty,
                });
                for &s in &arcs[1..arcs.len() - 1] {
                    out.push(BoundaryNode {
                        p: a + dir * s,
                        normal: normals[k],
                        ty,
                    });
                }
            }
            Ok(out)
        }
        3 => cube_boundary(lo, hi, ty, h, rng),
        _ => Err(GeometryError::Unsupported(format!(
            "box boundary discretization in {D} dimensions"
        ))),
    }
}

fn cube_boundary<const D: usize>(
    lo: &Point<D>,
    hi: &Point<D>,
    ty: i32,
    h: &Spacing<D>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BoundaryNode<D>>, GeometryError> {
    let corner = |mask: usize| Point::<D>::from_fn(|i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] });
    // outward normal of the box at a point lying on its boundary
    let normal_at = |p: &Point<D>| {
        let n = Point::<D>::from_fn(|i, _| {
            if p[i] == lo[i] {
                -1.0
            } else if p[i] == hi[i] {
                1.0
            } else {
                0.0
            }
        });
        n.normalize()
    };
    let mut out: Vec<BoundaryNode<D>> = Vec::new();
    for mask in 0..8 {
        let p = corner(mask);
        h.checked(&p)?;
        out.push(BoundaryNode {
            p,
            normal: normal_at(&p),
            ty,
        });
    }
    for axis in 0..3 {
        for mask in 0..8usize {
            if mask >> axis & 1 == 1 {
                continue;
            }
            let a = corner(mask);
            let b = corner(mask | 1 << axis);
            let len = b[axis] - a[axis];
            let arcs = march(len, |s| {
                let mut p = a;
                p[axis] += s;
                h.checked(&p)
            })?;
            for &s in &arcs[1..arcs.len() - 1] {
                let mut p = a;
                p[axis] += s;
                out.push(BoundaryNode {
                    p,
                    normal: normal_at(&p),
                    ty,
                });
            }
        }
    }
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for (value, sign) in [(lo[axis], -1.0), (hi[axis], 1.0)] {
            let on_face: Vec<Point<D>> = out.iter().map(|n| n.p).filter(|p| p[axis] == value).collect();
            let existing: Vec<Point<D>> = out.iter().map(|n| n.p).collect();
            let inside = |p: &Point<D>| lo[u] < p[u] && p[u] < hi[u] && lo[v] < p[v] && p[v] < hi[v];
            let face_nodes = advancing_fill(
                &existing,
                &on_face,
                inside,
                |rng| {
                    circle_directions(rng, |c, s| {
                        let mut d = Point::<D>::zeros();
                        d[u] = c;
                        d[v] = s;
                        d
                    })
                },
                h,
                rng,
            )?;
            let mut normal = Point::<D>::zeros();
            normal[axis] = sign;
            out.extend(face_nodes.into_iter().map(|mut p| {
                p[axis] = value;
                BoundaryNode { p, normal, ty }
            }));
        }
    }
    Ok(out)
}
