use std::collections::BTreeMap;

use crate::Point;

use super::{GeometryError, Spacing};

/// Tolerance on the length of stored boundary normals.
const NORMAL_TOLERANCE: f64 = 1e-12;

/// A node cloud with type tags, boundary normals and per-node stencils.
///
/// Interior nodes have positive types, boundary nodes negative ones, and every
/// boundary node has an outward unit normal. A computed stencil always lists the
/// node itself first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DomainDiscretization<const D: usize> {
    positions: Vec<Point<D>>,
    types: Vec<i32>,
    normals: Vec<Option<Point<D>>>,
    stencils: Vec<Vec<usize>>,
}

/// Selects a subset of nodes of a domain.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeFilter {
    All,
    Interior,
    Boundary,
    Type(i32),
    Indices(Vec<usize>),
}

impl NodeFilter {
    /// Matching node indices in ascending order.
    pub fn select<const D: usize>(&self, domain: &DomainDiscretization<D>) -> Vec<usize> {
        let n = domain.size();
        match self {
            NodeFilter::All => (0..n).collect(),
            NodeFilter::Interior => (0..n).filter(|&i| domain.types[i] > 0).collect(),
            NodeFilter::Boundary => (0..n).filter(|&i| domain.types[i] < 0).collect(),
            NodeFilter::Type(t) => (0..n).filter(|&i| domain.types[i] == *t).collect(),
            NodeFilter::Indices(idx) => {
                let mut v: Vec<usize> = idx.iter().copied().filter(|&i| i < n).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }
}

impl<const D: usize> DomainDiscretization<D> {
    pub fn new() -> Self {
        Self {
            positions: Vec::new(),
            types: Vec::new(),
            normals: Vec::new(),
            stencils: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point<D>] {
        &self.positions
    }

    pub fn pos(&self, i: usize) -> &Point<D> {
        &self.positions[i]
    }

    pub fn types(&self) -> &[i32] {
        &self.types
    }

    pub fn type_of(&self, i: usize) -> i32 {
        self.types[i]
    }

    pub fn normal(&self, i: usize) -> Option<&Point<D>> {
        self.normals[i].as_ref()
    }

    pub fn stencil(&self, i: usize) -> &[usize] {
        &self.stencils[i]
    }

    pub fn stencils(&self) -> &[Vec<usize>] {
        &self.stencils
    }

    pub fn support_size(&self, i: usize) -> usize {
        self.stencils[i].len()
    }

    pub fn interior(&self) -> Vec<usize> {
        NodeFilter::Interior.select(self)
    }

    pub fn boundary(&self) -> Vec<usize> {
        NodeFilter::Boundary.select(self)
    }

    /// Appends an interior node; `node_type` must be positive.
    pub fn add_internal_node(&mut self, p: Point<D>, node_type: i32) -> Result<usize, GeometryError> {
        if node_type <= 0 {
            return Err(GeometryError::InvalidTag(node_type));
        }
        Ok(self.push(p, node_type, None))
    }

    /// Appends a boundary node; `node_type` must be negative and `normal` nonzero.
    /// The normal is normalized before being stored.
    pub fn add_boundary_node(&mut self, p: Point<D>, node_type: i32, normal: Point<D>) -> Result<usize, GeometryError> {
        if node_type >= 0 {
            return Err(GeometryError::InvalidTag(node_type));
        }
        let len = normal.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(GeometryError::BadNormal {
                node: self.size(),
                length: len,
            });
        }
        Ok(self.push(p, node_type, Some(normal / len)))
    }

    fn push(&mut self, p: Point<D>, node_type: i32, normal: Option<Point<D>>) -> usize {
        self.positions.push(p);
        self.types.push(node_type);
        self.normals.push(normal);
        self.stencils.push(Vec::new());
        self.positions.len() - 1
    }

    /// Replaces the stencil of node `i`. The stencil must start with `i`.
    pub fn set_stencil(&mut self, i: usize, stencil: Vec<usize>) -> Result<(), GeometryError> {
        let n = self.size();
        if i >= n {
            return Err(GeometryError::IndexOutOfRange { index: i, size: n });
        }
        if stencil.first() != Some(&i) {
            return Err(GeometryError::InvalidShape(format!(
                "stencil of node {i} must list the node itself first"
            )));
        }
        if let Some(&bad) = stencil.iter().find(|&&j| j >= n) {
            return Err(GeometryError::IndexOutOfRange { index: bad, size: n });
        }
        self.stencils[i] = stencil;
        Ok(())
    }

    pub(crate) fn set_stencil_unchecked(&mut self, i: usize, stencil: Vec<usize>) {
        self.stencils[i] = stencil;
    }

    /// Appends one ghost node `p + h(p) n` outside every boundary node and
    /// returns the map from boundary node index to ghost node index.
    ///
    /// Ghost nodes with a negative tag inherit the normal of their boundary node.
    pub fn add_ghost_nodes(&mut self, h: &Spacing<D>, tag: i32) -> Result<BTreeMap<usize, usize>, GeometryError> {
        if tag == 0 {
            return Err(GeometryError::ReservedTag);
        }
        let mut map = BTreeMap::new();
        for i in self.boundary() {
            let normal = self.normals[i].ok_or(GeometryError::MissingNormal { node: i })?;
            let p = self.positions[i];
            let ghost = p + normal * h.checked(&p)?;
            let g = self.push(ghost, tag, if tag < 0 { Some(normal) } else { None });
            map.insert(i, g);
        }
        Ok(map)
    }

    /// Checks the structural invariants: tag signs, unit normals on boundary nodes,
    /// self-first stencils with in-range indices.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.size();
        for i in 0..n {
            let t = self.types[i];
            if t == 0 {
                return Err(GeometryError::ReservedTag);
            }
            match (t < 0, &self.normals[i]) {
                (true, None) => return Err(GeometryError::MissingNormal { node: i }),
                (true, Some(nv)) => {
                    let len = nv.norm();
                    if (len - 1.0).abs() > NORMAL_TOLERANCE {
                        return Err(GeometryError::BadNormal { node: i, length: len });
                    }
                }
                (false, Some(_)) => return Err(GeometryError::InvalidTag(t)),
                (false, None) => {}
            }
            let s = &self.stencils[i];
            if !s.is_empty() && s[0] != i {
                return Err(GeometryError::InvalidShape(format!(
                    "stencil of node {i} does not start with the node itself"
                )));
            }
            if let Some(&bad) = s.iter().find(|&&j| j >= n) {
                return Err(GeometryError::IndexOutOfRange { index: bad, size: n });
            }
        }
        Ok(())
    }

    /// Smallest distance between any two nodes (brute force, for diagnostics).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.size() {
            for j in i + 1..self.size() {
                best = best.min((self.positions[i] - self.positions[j]).norm());
            }
        }
        best
    }
}
