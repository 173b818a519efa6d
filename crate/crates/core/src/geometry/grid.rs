use std::collections::HashMap;

use crate::Point;

/// Uniform background grid supporting incremental insertion and radius queries.
pub(crate) struct SpatialGrid<const D: usize> {
    cell: f64,
    cells: HashMap<[i64; D], Vec<usize>>,
    points: Vec<Point<D>>,
}

impl<const D: usize> SpatialGrid<D> {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell size must be positive");
        Self {
            cell,
            cells: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, p: &Point<D>) -> [i64; D] {
        std::array::from_fn(|i| (p[i] / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Point<D>) -> usize {
        let id = self.points.len();
        self.cells.entry(self.key(&p)).or_default().push(id);
        self.points.push(p);
        id
    }

    /// Calls `f(id, distance)` for every stored point closer than `r` to `p`
    /// until `f` returns `true`; returns whether it did.
    pub fn any_within(&self, p: &Point<D>, r: f64, mut f: impl FnMut(usize, f64) -> bool) -> bool {
        let center = self.key(p);
        let reach = (r / self.cell).ceil() as i64;
        let mut offset = [-reach; D];
        loop {
            let key: [i64; D] = std::array::from_fn(|i| center[i] + offset[i]);
            if let Some(ids) = self.cells.get(&key) {
                for &id in ids {
                    let d = (self.points[id] - p).norm();
                    if d < r && f(id, d) {
                        return true;
                    }
                }
            }
            // odometer over the (2 reach + 1)^D neighborhood
            let mut axis = 0;
            loop {
                if axis == D {
                    return false;
                }
                if offset[axis] < reach {
                    offset[axis] += 1;
                    break;
                }
                offset[axis] = -reach;
                axis += 1;
            }
        }
    }
}
