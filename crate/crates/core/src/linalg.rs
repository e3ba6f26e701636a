//! Dense complex matrices and the handful of factorizations the solvers need.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{creal, czero, Real, C};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = creal(T::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: bad.len(),
            });
        }
        Ok(DenseMatrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        let rows: Vec<Vec<C<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| creal(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<C<T>>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == czero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(czero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols.min(self.rows) {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix by implicit QL
/// with Wilkinson shifts.
///
/// `diag` has length `n`, `off` has length `n - 1` (`off[i]` couples `i` and
/// `i + 1`). Returns eigenvalues in ascending order and, if requested, the
/// matching orthonormal eigenvectors as columns (`vectors[k]` is the k-th
/// eigenvector).
pub fn tridiagonal_eigen<T: Real>(
    diag: &[T],
    off: &[T],
    want_vectors: bool,
) -> Result<(Vec<T>, Option<Vec<Vec<T>>>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(Vec::new)));
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: off.len(),
        });
    }
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off.iter().copied().chain(std::iter::once(T::zero())).collect();
    // z[row][col], columns are eigenvectors
    let mut z: Vec<Vec<T>> = if want_vectors {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect()
    } else {
        Vec::new()
    };
    let two = T::of(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NotConverged {
                    iterations: iter,
                    residual: e[l].abs().as_f64(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if want_vectors {
                    for row in z.iter_mut() {
                        let fz = row[i + 1];
                        row[i + 1] = s * row[i] + c * fz;
                        row[i] = c * row[i] - s * fz;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = want_vectors.then(|| {
        order
            .iter()
            .map(|&k| (0..n).map(|row| z[row][k]).collect())
            .collect()
    });
    Ok((values, vectors))
}

/// Eigen-decomposition of a dense Hermitian matrix.
///
/// Householder reduction to complex Hermitian tridiagonal form, a diagonal
/// phase gauge to make the tridiagonal real, then implicit QL.
pub fn hermitian_eigen<T: Real>(
    a: &DenseMatrix<T>,
    want_vectors: bool,
) -> Result<(Vec<T>, Option<Vec<Vec<C<T>>>>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(Vec::new)));
    }
    let mut m = a.clone();
    let mut reflectors: Vec<Vec<C<T>>> = Vec::with_capacity(n.saturating_sub(2));
    let mut sub: Vec<C<T>> = Vec::with_capacity(n - 1);
    let two = T::of(2.0);

    for k in 0..n.saturating_sub(1) {
        let x: Vec<C<T>> = (k + 1..n).map(|i| m[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if k + 2 >= n || xnorm == T::zero() {
            sub.push(x[0]);
            reflectors.push(Vec::new());
            continue;
        }
        let phase = if x[0].norm() > T::zero() {
            x[0] / x[0].norm()
        } else {
            creal(T::one())
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            sub.push(alpha);
            reflectors.push(Vec::new());
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }
        let len = n - k - 1;
        // p = B v on the trailing block
        let mut p = vec![czero::<T>(); len];
        for (r, pr) in p.iter_mut().enumerate() {
            let row = &m.data[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            *pr = row.iter().zip(&v).fold(czero(), |acc, (b, vv)| acc + b * vv);
        }
        let kappa = v.iter().zip(&p).fold(czero::<T>(), |acc, (vv, pp)| acc + vv.conj() * pp).re;
        let w: Vec<C<T>> = p.iter().zip(&v).map(|(pp, vv)| pp - vv * kappa).collect();
        for r in 0..len {
            for c in 0..len {
                let upd = (v[r] * w[c].conj() + w[r] * v[c].conj()) * two;
                m.data[(k + 1 + r) * n + k + 1 + c] -= upd;
            }
        }
        m[(k + 1, k)] = alpha;
        m[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            m[(i, k)] = czero();
            m[(k, i)] = czero();
        }
        sub.push(alpha);
        reflectors.push(v);
    }

    let diag: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut phases = vec![creal::<T>(T::one()); n];
    let mut off = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let s = sub[k];
        let mag = s.norm();
        let ph = if mag > T::zero() { s / mag } else { creal(T::one()) };
        phases[k + 1] = phases[k] * ph;
        off.push(mag);
    }
    let (values, zvecs) = tridiagonal_eigen(&diag, &off, want_vectors)?;
    let vectors = zvecs.map(|zs| {
        zs.into_iter()
            .map(|z| {
                let mut y: Vec<C<T>> = z.iter().zip(&phases).map(|(&zi, &ph)| ph * zi).collect();
                for (k, v) in reflectors.iter().enumerate().rev() {
                    if v.is_empty() {
                        continue;
                    }
                    let tail = &mut y[k + 1..];
                    let proj = v.iter().zip(tail.iter()).fold(czero::<T>(), |acc, (vv, yy)| acc + vv.conj() * yy);
                    for (yy, vv) in tail.iter_mut().zip(v) {
                        *yy -= vv * proj * two;
                    }
                }
                y
            })
            .collect()
    });
    Ok((values, vectors))
}

/// Lower Cholesky factor `L` with `A = L L†` for a Hermitian positive
/// definite matrix.
pub fn cholesky<T: Real>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return Err(Error::Singular(format!(
                "matrix is not positive definite (pivot {j} = {diag:e})"
            )));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = creal(ljj);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `A x = b` given the Cholesky factor of `A`.
pub fn cholesky_solve<T: Real>(l: &DenseMatrix<T>, b: &[C<T>]) -> Vec<C<T>> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}
