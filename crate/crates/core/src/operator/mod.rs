//! Operators as sums of k-local terms.
//!
//! A [`LocalTerm`] stores a `d^k x d^k` matrix in the tensor-product basis of
//! the local values on its `acting_on` sites, with the first listed site as
//! the most significant digit. The central query is
//! [`Operator::connected_elements`], which lists every `σ'` with a nonzero
//! `<σ|H|σ'>`.
//!
//! On a constrained Hilbert space the operator is understood as projected onto
//! that space: connected configurations violating the constraint are dropped.

mod predefined;
mod sparse;

pub use predefined::{
    bose_hubbard, graph_operator, heisenberg, heisenberg_bond, heisenberg_with_sign_rule, ising, pauli_x, pauli_y, pauli_z,
};
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertIndex, HilbertSpace};
use crate::linalg::DenseMatrix;
use crate::scalar::{czero, Real, C};

/// Connected configurations and matrix elements for one row.
pub type Connected<T> = Vec<(Vec<T>, C<T>)>;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm<T> {
    acting_on: Vec<usize>,
    matrix: DenseMatrix<T>,
    /// Nonzero `(column, element)` pairs of each row.
    rows: Vec<Vec<(usize, C<T>)>>,
}

impl<T: Real> LocalTerm<T> {
    pub fn new(acting_on: Vec<usize>, matrix: DenseMatrix<T>, local_size: usize, n_sites: usize) -> Result<Self> {
        if acting_on.is_empty() {
            return Err(Error::invalid("local term must act on at least one site"));
        }
        for (k, &s) in acting_on.iter().enumerate() {
            if s >= n_sites {
                return Err(Error::invalid(format!("site {s} out of range for {n_sites} sites")));
            }
            if acting_on[..k].contains(&s) {
                return Err(Error::invalid(format!("site {s} repeated in acting_on {acting_on:?}")));
            }
        }
        let dim = local_size
            .checked_pow(acting_on.len() as u32)
            .ok_or_else(|| Error::invalid("local term too large"))?;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.rows().max(matrix.cols()),
            });
        }
        let rows = (0..dim)
            .map(|r| {
                matrix
                    .row(r)
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| **m != czero())
                    .map(|(c, &m)| (c, m))
                    .collect()
            })
            .collect();
        Ok(LocalTerm {
            acting_on,
            matrix,
            rows,
        })
    }

    pub fn acting_on(&self) -> &[usize] {
        &self.acting_on
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }
}

/// Digits of a local row/column index, first site most significant.
fn digits(mut code: usize, d: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = code % d;
        code /= d;
    }
    out
}

/// Sum of local terms over a Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    hilbert: HilbertSpace<T>,
    terms: Vec<LocalTerm<T>>,
}

impl<T: Real> Operator<T> {
    pub fn zero(hilbert: &HilbertSpace<T>) -> Self {
        Operator {
            hilbert: hilbert.clone(),
            terms: Vec::new(),
        }
    }

    /// Operator built from explicit local matrices and their site lists.
    pub fn local(hilbert: &HilbertSpace<T>, matrices: Vec<DenseMatrix<T>>, acting_on: Vec<Vec<usize>>) -> Result<Self> {
        if matrices.len() != acting_on.len() {
            return Err(Error::DimensionMismatch {
                expected: matrices.len(),
                found: acting_on.len(),
            });
        }
        let mut op = Self::zero(hilbert);
        for (m, sites) in matrices.into_iter().zip(acting_on) {
            op.push_term(sites, m)?;
        }
        Ok(op)
    }

    /// `c · 1`, stored as a single-site term on site 0.
    pub fn identity(hilbert: &HilbertSpace<T>, c: C<T>) -> Result<Self> {
        let d = hilbert.local_size();
        Self::local(hilbert, vec![DenseMatrix::identity(d).scaled(c)], vec![vec![0]])
    }

    pub fn push_term(&mut self, acting_on: Vec<usize>, matrix: DenseMatrix<T>) -> Result<()> {
        let term = LocalTerm::new(acting_on, matrix, self.hilbert.local_size(), self.hilbert.n_sites())?;
        self.terms.push(term);
        Ok(())
    }

    pub fn hilbert(&self) -> &HilbertSpace<T> {
        &self.hilbert
    }

    pub fn terms(&self) -> &[LocalTerm<T>] {
        &self.terms
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.hilbert != other.hilbert {
            return Err(Error::invalid("operators act on different Hilbert spaces"));
        }
        Ok(())
    }

    /// `self + other` (concatenates the term lists).
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn scaled(&self, c: C<T>) -> Self {
        let mut out = self.clone();
        for t in out.terms.iter_mut() {
            *t = LocalTerm::new(
                t.acting_on.clone(),
                t.matrix.scaled(c),
                self.hilbert.local_size(),
                self.hilbert.n_sites(),
            )
            .expect("scaling preserves shape");
        }
        out
    }

    /// Operator product `self · other`; each pair of terms is merged into a
    /// single term on the union of their sites.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let d = self.hilbert.local_size();
        let mut out = Self::zero(&self.hilbert);
        for a in &self.terms {
            for b in &other.terms {
                let mut union = a.acting_on.clone();
                for &s in &b.acting_on {
                    if !union.contains(&s) {
                        union.push(s);
                    }
                }
                let ea = embed(a, &union, d);
                let eb = embed(b, &union, d);
                out.push_term(union, ea.matmul(&eb)?)?;
            }
        }
        Ok(out)
    }

    /// True when every term is Hermitian to `tol`.
    pub fn terms_hermitian(&self, tol: T) -> bool {
        self.terms.iter().all(|t| t.matrix.hermiticity_defect() <= tol)
    }

    pub fn is_real(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.matrix.as_slice().iter().all(|z| z.im == T::zero()))
    }

    /// Connected elements in local-index form. The diagonal element, when
    /// nonzero, comes first; the rest are sorted by configuration.
    pub fn connected_indices(&self, idx: &[usize]) -> Vec<(Vec<usize>, C<T>)> {
        let d = self.hilbert.local_size();
        let mut diag = czero::<T>();
        let mut off: Vec<(Vec<usize>, C<T>)> = Vec::new();
        for term in &self.terms {
            let k = term.acting_on.len();
            let r = term.acting_on.iter().fold(0, |acc, &s| acc * d + idx[s]);
            for &(c, mel) in &term.rows[r] {
                if c == r {
                    diag += mel;
                    continue;
                }
                let mut next = idx.to_vec();
                for (&s, dig) in term.acting_on.iter().zip(digits(c, d, k)) {
                    next[s] = dig;
                }
                off.push((next, mel));
            }
        }
        off.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Vec<usize>, C<T>)> = Vec::with_capacity(off.len() + 1);
        if diag != czero() {
            merged.push((idx.to_vec(), diag));
        }
        let start = merged.len();
        for (cfg, mel) in off {
            match merged[start..].last_mut() {
                Some(last) if last.0 == cfg => last.1 += mel,
                _ => merged.push((cfg, mel)),
            }
        }
        let constraint = self.hilbert.index_sum();
        merged.retain(|(cfg, mel)| {
            *mel != czero() && constraint.is_none_or(|target| cfg.iter().sum::<usize>() == target)
        });
        merged
    }

    /// Every `σ'` with `<σ|H|σ'> != 0`, duplicates merged.
    pub fn connected_elements(&self, config: &[T]) -> Result<Connected<T>> {
        let idx = self.hilbert.to_indices(config)?;
        if !self.hilbert.satisfies_constraint(config) {
            return Err(Error::InvalidConfiguration(format!(
                "{config:?} violates the space constraint"
            )));
        }
        Ok(self
            .connected_indices(&idx)
            .into_iter()
            .map(|(cfg, mel)| (self.hilbert.from_indices(&cfg), mel))
            .collect())
    }

    /// Dense matrix in [`HilbertIndex`] order (at most 2^14 states).
    pub fn to_dense(&self, index: &HilbertIndex<T>) -> Result<DenseMatrix<T>> {
        const LIMIT: usize = 1 << 14;
        let n = index.n_states();
        if n > LIMIT {
            return Err(Error::SpaceTooLarge {
                n_states: n as u128,
                limit: LIMIT as u128,
            });
        }
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let idx = index.number_to_indices(i)?;
            for (cfg, mel) in self.connected_indices(&idx) {
                if let Some(j) = index.indices_to_number(&cfg) {
                    m[(i, j)] += mel;
                }
            }
        }
        Ok(m)
    }

    /// Compressed sparse rows in [`HilbertIndex`] order.
    pub fn to_sparse(&self, index: &HilbertIndex<T>) -> Result<SparseMatrix<T>> {
        SparseMatrix::from_operator(self, index)
    }
}

/// Embeds a term into the tensor basis of `union` (which starts with the
/// term's own sites in some order).
fn embed<T: Real>(term: &LocalTerm<T>, union: &[usize], d: usize) -> DenseMatrix<T> {
    let k = union.len();
    let dim = d.pow(k as u32);
    let pos: Vec<usize> = term
        .acting_on
        .iter()
        .map(|s| union.iter().position(|u| u == s).expect("site in union"))
        .collect();
    let rest: Vec<usize> = (0..k).filter(|p| !pos.contains(p)).collect();
    let local = |dig: &[usize]| pos.iter().fold(0, |acc, &p| acc * d + dig[p]);
    let mut out = DenseMatrix::zeros(dim, dim);
    for r in 0..dim {
        let dr = digits(r, d, k);
        for c in 0..dim {
            let dc = digits(c, d, k);
            if rest.iter().all(|&p| dr[p] == dc[p]) {
                out[(r, c)] = term.matrix[(local(&dr), local(&dc))];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Graph;
    use num_complex::Complex64;

    fn spin_half(n: usize) -> HilbertSpace<f64> {
        HilbertSpace::spin_sites(0.5, n, None).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn identity_connects_to_itself() {
        let h = spin_half(3);
        let op = Operator::identity(&h, one()).unwrap();
        let sigma = [1.0, -1.0, 1.0];
        assert_eq!(op.connected_elements(&sigma).unwrap(), vec![(sigma.to_vec(), one())]);
    }

    #[test]
    fn sigma_x_flips_one_site() {
        let h = spin_half(3);
        let op = Operator::local(&h, vec![pauli_x()], vec![vec![0]]).unwrap();
        let got = op.connected_elements(&[1.0, -1.0, 1.0]).unwrap();
        assert_eq!(got, vec![(vec![-1.0, -1.0, 1.0], one())]);
    }

    #[test]
    fn sigma_z_squared_is_identity() {
        let h = spin_half(2);
        let z = Operator::local(&h, vec![pauli_z()], vec![vec![0]]).unwrap();
        let zz = z.product(&z).unwrap();
        let idx = h.index().unwrap();
        let dense = zz.to_dense(&idx).unwrap();
        assert!(dense.max_abs_diff(&DenseMatrix::identity(4)) < 1e-15);
        assert_eq!(zz.terms()[0].acting_on(), &[0]);
    }

    #[test]
    fn product_on_disjoint_sites_is_tensor_product() {
        let h = spin_half(2);
        let x0 = Operator::local(&h, vec![pauli_x()], vec![vec![0]]).unwrap();
        let z1 = Operator::local(&h, vec![pauli_z()], vec![vec![1]]).unwrap();
        let p = x0.product(&z1).unwrap();
        let idx = h.index().unwrap();
        let expected = pauli_x::<f64>().kron(&pauli_z());
        assert!(p.to_dense(&idx).unwrap().max_abs_diff(&expected) < 1e-15);
        // reversed order on overlapping sites: (σz σx) on site 0 = i σy
        let x = Operator::local(&h, vec![pauli_x()], vec![vec![0]]).unwrap();
        let z = Operator::local(&h, vec![pauli_z()], vec![vec![0]]).unwrap();
        let zx = z.product(&x).unwrap().to_dense(&idx).unwrap();
        let iy = pauli_y::<f64>().scaled(Complex64::new(0.0, 1.0)).kron(&DenseMatrix::identity(2));
        assert!(zx.max_abs_diff(&iy) < 1e-15);
    }

    #[test]
    fn term_validation() {
        let h = spin_half(2);
        assert!(Operator::local(&h, vec![pauli_x()], vec![vec![2]]).is_err());
        assert!(Operator::local(&h, vec![pauli_x().kron(&pauli_x())], vec![vec![0, 0]]).is_err());
        assert!(Operator::local(&h, vec![pauli_x()], vec![vec![0, 1]]).is_err());
        let other = spin_half(3);
        let a = Operator::<f64>::zero(&h);
        let b = Operator::<f64>::zero(&other);
        assert!(a.sum(&b).is_err());
        assert!(a.product(&b).is_err());
    }

    #[test]
    fn zero_operator_has_no_connections() {
        let h = spin_half(3);
        let op = Operator::<f64>::zero(&h);
        assert!(op.connected_elements(&[1.0, 1.0, 1.0]).unwrap().is_empty());
    }

    #[test]
    fn duplicates_are_merged() {
        let h = spin_half(2);
        let op = Operator::local(&h, vec![pauli_x(), pauli_x()], vec![vec![0], vec![0]]).unwrap();
        let got = op.connected_elements(&[1.0, 1.0]).unwrap();
        assert_eq!(got, vec![(vec![-1.0, 1.0], Complex64::new(2.0, 0.0))]);
        // canceling terms disappear
        let cancel = op.sum(&op.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        assert!(cancel.connected_elements(&[1.0, 1.0]).unwrap().is_empty());
    }

    #[test]
    fn invalid_configuration_rejected() {
        let g = Graph::hypercube(4, 1, true).unwrap();
        let h = HilbertSpace::<f64>::spin(0.5, &g, Some(0.0)).unwrap();
        let op = heisenberg(&h, &g).unwrap();
        assert!(op.connected_elements(&[1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(op.connected_elements(&[1.0, 1.0]).is_err());
        assert!(op.connected_elements(&[2.0, 1.0, -1.0, -1.0]).is_err());
    }

    #[test]
    fn to_dense_rejects_large_spaces() {
        let h = spin_half(15);
        let op = Operator::<f64>::zero(&h);
        let idx = h.index().unwrap();
        assert!(matches!(op.to_dense(&idx), Err(Error::SpaceTooLarge { .. })));
    }
}
