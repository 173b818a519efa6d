use crate::sparse::CsrMatrix;
use crate::Point;

use super::{Family, OperatorError, ShapeStorage};

/// Kind of equation held by a row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Interior,
    Dirichlet,
    Neumann,
}

impl RowKind {
    fn name(self) -> &'static str {
        match self {
            RowKind::Interior => "interior",
            RowKind::Dirichlet => "Dirichlet",
            RowKind::Neumann => "Neumann",
        }
    }
}

/// Square system `M u = r` under assembly, one row per node.
///
/// Row `i` only ever receives the equation of node `i`. Entries within a row keep
/// stencil order and repeated columns are summed in place, so a row assembled
/// from a single family multiplies a field exactly like the explicit operator.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    kinds: Vec<Option<RowKind>>,
}

impl SparseSystem {
    pub fn new(size: usize) -> Self {
        Self {
            rows: vec![Vec::new(); size],
            rhs: vec![0.0; size],
            kinds: vec![None; size],
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_kind(&self, i: usize) -> Option<RowKind> {
        self.kinds.get(i).copied().flatten()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    fn claim(&mut self, row: usize, kind: RowKind) -> Result<(), OperatorError> {
        if row >= self.size() {
            return Err(OperatorError::IndexOutOfRange {
                index: row,
                size: self.size(),
            });
        }
        match self.kinds[row] {
            None => {
                self.kinds[row] = Some(kind);
                Ok(())
            }
            // interior rows may be built from several terms
            Some(RowKind::Interior) if kind == RowKind::Interior => Ok(()),
            Some(existing) => Err(OperatorError::RowConflict {
                row,
                existing: existing.name(),
                requested: kind.name(),
            }),
        }
    }

    fn push(&mut self, row: usize, col: usize, value: f64) {
        let r = &mut self.rows[row];
        match r.iter_mut().find(|(c, _)| *c == col) {
            Some(entry) => entry.1 += value,
            None => r.push((col, value)),
        }
    }

    /// Adds `coef * w_family(node)` to row `row` at the stencil columns of `node`.
    /// Fails unless `row == node`.
    pub fn add_stencil_terms<const D: usize>(
        &mut self,
        storage: &ShapeStorage<D>,
        row: usize,
        node: usize,
        family: &Family,
        coef: f64,
    ) -> Result<(), OperatorError> {
        if row != node {
            return Err(OperatorError::RowOwnership { row, node });
        }
        let w = storage.weights(family, node)?;
        self.claim(row, RowKind::Interior)?;
        for (wj, &j) in w.iter().zip(storage.stencil(node)) {
            self.push(row, j, coef * wj);
        }
        Ok(())
    }

    /// Row `i` becomes `sum_k c_k w_{F_k}(i) . u = rhs`.
    pub fn assemble_interior_row<const D: usize>(
        &mut self,
        storage: &ShapeStorage<D>,
        i: usize,
        terms: &[(f64, Family)],
        rhs: f64,
    ) -> Result<(), OperatorError> {
        for (c, f) in terms {
            self.add_stencil_terms(storage, i, i, f, *c)?;
        }
        if terms.is_empty() {
            self.claim(i, RowKind::Interior)?;
        }
        self.rhs[i] = rhs;
        Ok(())
    }

    /// Row `i` becomes `u_i = value`.
    pub fn assemble_dirichlet_row(&mut self, i: usize, value: f64) -> Result<(), OperatorError> {
        self.claim(i, RowKind::Dirichlet)?;
        self.rows[i] = vec![(i, 1.0)];
        self.rhs[i] = value;
        Ok(())
    }

    /// Row `i` becomes the discrete normal derivative `du/dn (p_i) = value`.
    pub fn assemble_neumann_row<const D: usize>(
        &mut self,
        storage: &ShapeStorage<D>,
        i: usize,
        normal: &Point<D>,
        value: f64,
    ) -> Result<(), OperatorError> {
        if i >= self.size() {
            return Err(OperatorError::IndexOutOfRange {
                index: i,
                size: self.size(),
            });
        }
        let c = storage.normal_derivative_weights(normal, i)?;
        self.claim(i, RowKind::Neumann)?;
        for (cj, &j) in c.iter().zip(storage.stencil(i)) {
            self.push(i, j, *cj);
        }
        self.rhs[i] = value;
        Ok(())
    }

    /// Converts to CSR; every row must have been assembled.
    pub fn finalize(self) -> Result<(CsrMatrix, Vec<f64>), OperatorError> {
        if let Some(row) = self.kinds.iter().position(Option::is_none) {
            return Err(OperatorError::UnassembledRow { row });
        }
        let m = CsrMatrix::from_rows(self.rows.len(), &self.rows).expect("columns come from stencils");
        Ok((m, self.rhs))
    }
}
