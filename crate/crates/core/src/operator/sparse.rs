use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::HilbertIndex;
use crate::scalar::{czero, Real, C};

use super::Operator;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C<T>>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn from_operator(op: &Operator<T>, index: &HilbertIndex<T>) -> Result<Self> {
        if index.space() != op.hilbert() {
            return Err(Error::invalid("index built for a different Hilbert space"));
        }
        let dim = index.n_states();
        let rows: Vec<Vec<(usize, C<T>)>> = (0..dim)
            .into_par_iter()
            .map(|i| {
                let idx = index.number_to_indices(i)?;
                let mut row: Vec<(usize, C<T>)> = op
                    .connected_indices(&idx)
                    .into_iter()
                    .filter_map(|(cfg, mel)| index.indices_to_number(&cfg).map(|j| (j, mel)))
                    .collect();
                row.sort_by_key(|e| e.0);
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C<T>)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.dim, "vector length does not match matrix");
        (0..self.dim)
            .into_par_iter()
            .map(|i| self.row(i).fold(czero(), |acc, (j, v)| acc + v * x[j]))
            .collect()
    }
}
