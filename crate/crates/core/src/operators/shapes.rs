use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::approx::{ApproxEngine, Operator};
use crate::geometry::{DomainDiscretization, NodeFilter};
use crate::Point;

use super::OperatorError;

/// Environment variable capping the number of weight-computation threads
/// (`0` or unset means one per core).
pub const THREADS_ENV_VAR: &str = "MESHFREE_THREADS";

/// Thread count requested through [`THREADS_ENV_VAR`]; unparsable values are
/// treated as unset.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV_VAR)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// A kind of stored weights.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Identity,
    D1(usize),
    /// Mixed second derivative, always stored with `a <= b`.
    D2(usize, usize),
    Laplacian,
    /// A user operator registered under a name.
    Custom(String),
}

impl Family {
    pub fn d2(a: usize, b: usize) -> Self {
        Family::D2(a.min(b), a.max(b))
    }

    fn operator<const D: usize>(&self, custom: &BTreeMap<String, Operator<D>>) -> Operator<D> {
        match self {
            Family::Identity => Operator::Identity,
            Family::D1(a) => Operator::Derivative(*a),
            Family::D2(a, b) => Operator::SecondDerivative(*a, *b),
            Family::Laplacian => Operator::Laplacian,
            Family::Custom(name) => custom[name].clone(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Identity => write!(f, "identity"),
            Family::D1(a) => write!(f, "d{a}"),
            Family::D2(a, b) => write!(f, "d{a}{b}"),
            Family::Laplacian => write!(f, "laplacian"),
            Family::Custom(name) => write!(f, "{name}"),
        }
    }
}

/// Which operator families to compute.
#[derive(Clone, Debug, Default)]
pub struct ShapeRequest<const D: usize> {
    families: Vec<Family>,
    custom: BTreeMap<String, Operator<D>>,
}

impl<const D: usize> ShapeRequest<D> {
    pub fn new() -> Self {
        Self {
            families: Vec::new(),
            custom: BTreeMap::new(),
        }
    }

    pub fn with(mut self, family: Family) -> Self {
        let family = match family {
            Family::D2(a, b) => Family::d2(a, b),
            f => f,
        };
        if !self.families.contains(&family) {
            self.families.push(family);
        }
        self
    }

    pub fn identity(self) -> Self {
        self.with(Family::Identity)
    }

    pub fn laplacian(self) -> Self {
        self.with(Family::Laplacian)
    }

    /// All `D` first derivatives.
    pub fn first_derivatives(self) -> Self {
        (0..D).fold(self, |r, a| r.with(Family::D1(a)))
    }

    /// The `D (D + 1) / 2` second derivatives of the upper triangle.
    pub fn second_derivatives(self) -> Self {
        let mut r = self;
        for a in 0..D {
            for b in a..D {
                r = r.with(Family::D2(a, b));
            }
        }
        r
    }

    /// Registers an arbitrary operator (typically [`Operator::Custom`]) under `name`.
    pub fn custom(mut self, name: impl Into<String>, op: Operator<D>) -> Result<Self, OperatorError> {
        let name = name.into();
        if self.custom.contains_key(&name) {
            return Err(OperatorError::DuplicateCustom(name));
        }
        self.custom.insert(name.clone(), op);
        Ok(self.with(Family::Custom(name)))
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    fn validate(&self) -> Result<(), OperatorError> {
        for f in &self.families {
            let op = f.operator(&self.custom);
            op.validate()
                .map_err(|e| OperatorError::Unsupported(format!("{f}: {e}")))?;
        }
        Ok(())
    }
}

/// Stencil weights per operator family and node, aligned with the stencils of
/// the domain they were computed on.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeStorage<const D: usize> {
    stencils: Vec<Vec<usize>>,
    normals: Vec<Option<Point<D>>>,
    computed: Vec<bool>,
    tables: BTreeMap<Family, Vec<Vec<f64>>>,
}

/// Computes weights for all requested families at the nodes selected by
/// `for_which`, using [`threads_from_env`] threads. The result does not depend on
/// the thread count.
pub fn compute_shapes<const D: usize>(
    domain: &DomainDiscretization<D>,
    engine: &ApproxEngine,
    request: &ShapeRequest<D>,
    for_which: &NodeFilter,
) -> Result<ShapeStorage<D>, OperatorError> {
    compute_shapes_with_threads(domain, engine, request, for_which, threads_from_env())
}

/// [`compute_shapes`] with an explicit thread count (`0` = one per core).
pub fn compute_shapes_with_threads<const D: usize>(
    domain: &DomainDiscretization<D>,
    engine: &ApproxEngine,
    request: &ShapeRequest<D>,
    for_which: &NodeFilter,
    threads: usize,
) -> Result<ShapeStorage<D>, OperatorError> {
    request.validate()?;
    engine
        .validate()
        .map_err(|e| OperatorError::Unsupported(format!("engine: {e}")))?;
    let selected = for_which.select(domain);
    for &i in &selected {
        if domain.stencil(i).is_empty() {
            return Err(OperatorError::MissingStencil { node: i });
        }
    }
    let ops: Vec<Operator<D>> = request.families.iter().map(|f| f.operator(&request.custom)).collect();

    let node_weights = |i: usize| -> Result<Vec<Vec<f64>>, OperatorError> {
        let points: Vec<Point<D>> = domain.stencil(i).iter().map(|&j| *domain.pos(j)).collect();
        let prepared = engine
            .prepare(&points, domain.pos(i))
            .map_err(|source| OperatorError::Weights { node: i, source })?;
        ops.iter()
            .map(|op| {
                prepared
                    .weights(op)
                    .map_err(|source| OperatorError::Weights { node: i, source })
            })
            .collect()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| OperatorError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<Vec<Vec<f64>>, OperatorError>> =
        pool.install(|| selected.par_iter().map(|&i| node_weights(i)).collect());

    let n = domain.size();
    let mut tables: BTreeMap<Family, Vec<Vec<f64>>> = request
        .families
        .iter()
        .map(|f| (f.clone(), vec![Vec::new(); n]))
        .collect();
    let mut computed = vec![false; n];
    // results are in node order, so the first error reported is deterministic
    for (&i, res) in selected.iter().zip(results) {
        let per_family = res?;
        for (f, w) in request.families.iter().zip(per_family) {
            tables.get_mut(f).expect("family table exists")[i] = w;
        }
        computed[i] = true;
    }
    Ok(ShapeStorage {
        stencils: domain.stencils().to_vec(),
        normals: (0..n).map(|i| domain.normal(i).copied()).collect(),
        computed,
        tables,
    })
}

impl<const D: usize> ShapeStorage<D> {
    pub fn size(&self) -> usize {
        self.stencils.len()
    }

    pub fn stencil(&self, i: usize) -> &[usize] {
        &self.stencils[i]
    }

    pub fn is_computed(&self, i: usize) -> bool {
        self.computed.get(i).copied().unwrap_or(false)
    }

    pub fn has_family(&self, family: &Family) -> bool {
        self.tables.contains_key(family)
    }

    pub fn families(&self) -> impl Iterator<Item = &Family> {
        self.tables.keys()
    }

    /// Outward normal of boundary node `i`, as stored in the domain.
    pub fn normal(&self, i: usize) -> Option<&Point<D>> {
        self.normals.get(i).and_then(|n| n.as_ref())
    }

    /// Weights of `family` at node `i`, aligned with `stencil(i)`.
    pub fn weights(&self, family: &Family, i: usize) -> Result<&[f64], OperatorError> {
        let key = match family {
            Family::D2(a, b) => Family::d2(*a, *b),
            f => f.clone(),
        };
        if i >= self.size() {
            return Err(OperatorError::IndexOutOfRange {
                index: i,
                size: self.size(),
            });
        }
        let table = self.tables.get(&key).ok_or_else(|| OperatorError::UnstoredFamily {
            family: key.to_string(),
        })?;
        if !self.computed[i] {
            return Err(OperatorError::NodeNotComputed { node: i });
        }
        Ok(&table[i])
    }

    /// Total number of stored weights of one family.
    pub fn stored_len(&self, family: &Family) -> usize {
        self.tables.get(family).map_or(0, |t| t.iter().map(Vec::len).sum())
    }

    /// Debug dump as `node,family,offset,weight` lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "node,family,offset,weight")?;
        for i in (0..self.size()).filter(|&i| self.computed[i]) {
            for (family, table) in &self.tables {
                for (k, w) in table[i].iter().enumerate() {
                    writeln!(out, "{i},{family},{k},{w:.16e}")?;
                }
            }
        }
        Ok(())
    }
}
