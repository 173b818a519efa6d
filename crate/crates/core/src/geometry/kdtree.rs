use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::Point;

const LEAF_SIZE: usize = 8;

/// Static kd-tree for exact k-nearest-neighbor queries.
///
/// Results are ordered by increasing distance, ties broken by ascending id,
/// so queries are fully deterministic.
#[derive(Clone, Debug)]
pub struct KdTree<const D: usize> {
    points: Vec<Point<D>>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    dist2: f64,
    id: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const D: usize> KdTree<D> {
    /// Builds a tree over `points`, identified by their position in the slice.
    pub fn new(points: &[Point<D>]) -> Self {
        Self::with_ids(points.iter().copied().zip(0..).collect())
    }

    /// Builds a tree over `(point, id)` pairs.
    pub fn with_ids(items: Vec<(Point<D>, usize)>) -> Self {
        let mut items = items;
        let mut nodes = Vec::new();
        if !items.is_empty() {
            let len = items.len();
            build(&mut items, 0, len, &mut nodes);
        }
        let (points, ids) = items.into_iter().unzip();
        Self { points, ids, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest stored items to `query` as `(id, squared distance)`.
    pub fn knn(&self, query: &Point<D>, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort_unstable();
        out.into_iter().map(|c| (c.id, c.dist2)).collect()
    }

    fn search(&self, node: usize, q: &Point<D>, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for i in start..end {
                    let c = Candidate {
                        dist2: (self.points[i] - q).norm_squared(),
                        id: self.ids[i],
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                // equal distances must still be visited: a smaller id may win the tie
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

fn build<const D: usize>(items: &mut [(Point<D>, usize)], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let me = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return me;
    }
    let slice = &mut items[start..end];
    let mut lo = Point::<D>::repeat(f64::INFINITY);
    let mut hi = Point::<D>::repeat(f64::NEG_INFINITY);
    for (p, _) in slice.iter() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let axis = (hi - lo).imax();
    if hi[axis] - lo[axis] == 0.0 {
        // all coincident
        nodes.push(Node::Leaf { start, end });
        return me;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
    let value = slice[mid].0[axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    // left holds [start, start + mid) with coordinates <= value, right the rest (>= value)
    let left = build(items, start, start + mid, nodes);
    let right = build(items, start + mid, end, nodes);
    nodes[me] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute<const D: usize>(pts: &[Point<D>], q: &Point<D>, k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ((p - q).norm_squared(), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|x| x.1).collect()
    }

    #[test]
    fn matches_brute_force_on_random_and_gridded_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let random: Vec<Point<3>> = (0..400).map(|_| Point::<3>::from_fn(|_, _| rng.gen::<f64>())).collect();
        // a grid has many exact ties
        let grid: Vec<Point<3>> = (0..343)
            .map(|i| Point::<3>::new((i % 7) as f64, (i / 7 % 7) as f64, (i / 49) as f64))
            .collect();
        for pts in [random, grid] {
            let tree = KdTree::new(&pts);
            for qi in (0..pts.len()).step_by(13) {
                for k in [1, 5, 19, 30] {
                    let got: Vec<usize> = tree.knn(&pts[qi], k).into_iter().map(|x| x.0).collect();
                    assert_eq!(got, brute(&pts, &pts[qi], k));
                }
            }
        }
    }

    #[test]
    fn k_larger_than_size() {
        let pts = vec![Point::<1>::new(0.0), Point::<1>::new(1.0)];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.knn(&Point::<1>::new(0.9), 5).len(), 2);
        assert!(KdTree::<2>::new(&[]).knn(&Point::<2>::zeros(), 3).is_empty());
    }
}
