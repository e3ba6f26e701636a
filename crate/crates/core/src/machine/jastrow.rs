use crate::error::Result;
use crate::scalar::{creal, czero, Real, C};

use super::{check_n_par, LookupTable, Machine};

/// Two-body Jastrow wavefunction `log Ψ(σ) = Σ_{i<j} σ_i W_ij σ_j`.
///
/// Parameter layout: the strict upper triangle of `W`, row by row
/// (`W_01, W_02, ..., W_0(N-1), W_12, ...`).
#[derive(Clone, Debug, PartialEq)]
pub struct Jastrow<T> {
    n_visible: usize,
    w: Vec<C<T>>,
}

impl<T: Real> Jastrow<T> {
    pub fn new(n_visible: usize) -> Self {
        Jastrow {
            n_visible,
            w: vec![czero(); n_visible * n_visible.saturating_sub(1) / 2],
        }
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let n = self.n_visible;
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    /// Symmetric weight `W_ij` (zero on the diagonal).
    pub fn weight(&self, i: usize, j: usize) -> C<T> {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => czero(),
            std::cmp::Ordering::Less => self.w[self.pair_index(i, j)],
            std::cmp::Ordering::Greater => self.w[self.pair_index(j, i)],
        }
    }

    /// Local fields `h_i = Σ_{j != i} W_ij σ_j`.
    fn fields(&self, v: &[T]) -> Vec<C<T>> {
        let n = self.n_visible;
        (0..n)
            .map(|i| (0..n).fold(czero(), |acc, j| acc + self.weight(i, j) * v[j]))
            .collect()
    }
}

impl<T: Real> Machine<T> for Jastrow<T> {
    fn kind(&self) -> &'static str {
        "Jastrow"
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.n_visible]
    }

    fn n_visible(&self) -> usize {
        self.n_visible
    }

    fn n_par(&self) -> usize {
        self.w.len()
    }

    fn parameters(&self) -> Vec<C<T>> {
        self.w.clone()
    }

    fn set_parameters(&mut self, p: &[C<T>]) -> Result<()> {
        check_n_par(self.n_par(), p)?;
        self.w.copy_from_slice(p);
        Ok(())
    }

    fn log_val(&self, v: &[T]) -> C<T> {
        assert_eq!(v.len(), self.n_visible, "configuration length");
        let n = self.n_visible;
        let mut acc = czero();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                acc += self.w[k] * (v[i] * v[j]);
                k += 1;
            }
        }
        acc
    }

    fn der_log(&self, v: &[T]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.n_visible, "configuration length");
        let n = self.n_visible;
        let mut out = Vec::with_capacity(self.w.len());
        for i in 0..n {
            for j in i + 1..n {
                out.push(creal(v[i] * v[j]));
            }
        }
        out
    }

    fn lookup(&self, v: &[T]) -> LookupTable<T> {
        self.fields(v)
    }

    fn log_val_diff(&self, v: &[T], changes: &[(usize, T)], lt: &LookupTable<T>) -> C<T> {
        // first-order field terms, then the pair correction among changed sites
        let mut diff = czero();
        for &(i, x) in changes {
            diff += lt[i] * (x - v[i]);
        }
        for (a, &(i, x)) in changes.iter().enumerate() {
            for &(j, y) in &changes[a + 1..] {
                diff += self.weight(i, j) * ((x - v[i]) * (y - v[j]));
            }
        }
        diff
    }

    fn update_lookup(&self, v: &[T], changes: &[(usize, T)], lt: &mut LookupTable<T>) {
        for &(j, x) in changes {
            let dx = x - v[j];
            for (i, h) in lt.iter_mut().enumerate() {
                *h += self.weight(i, j) * dx;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::{all_spin_states, der_log_fd_error};
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn zero_weights() {
        let j = Jastrow::<f64>::new(5);
        assert_eq!(j.n_par(), 10);
        assert_eq!(j.log_val(&[1.0, -1.0, 1.0, 1.0, -1.0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_sites() {
        let mut j = Jastrow::<f64>::new(2);
        let c = Complex64::new(0.3, -0.7);
        j.set_parameters(&[c]).unwrap();
        assert_eq!(j.log_val(&[1.0, 1.0]), c);
    }

    #[test]
    fn global_flip_symmetry_and_quadratic_form() {
        let mut j = Jastrow::<f64>::new(6);
        j.init_random_parameters(4, 0.5).unwrap();
        for v in all_spin_states(6) {
            let flipped: Vec<f64> = v.iter().map(|x| -x).collect();
            assert!((j.log_val(&v) - j.log_val(&flipped)).norm() < 1e-14);
            let mut q = Complex64::new(0.0, 0.0);
            for a in 0..6 {
                for b in 0..6 {
                    q += j.weight(a, b) * v[a] * v[b];
                }
            }
            assert!((j.log_val(&v) - q / 2.0).norm() < 1e-13);
        }
    }

    #[test]
    fn der_log_and_diff() {
        let mut j = Jastrow::<f64>::new(5);
        j.init_random_parameters(8, 0.2).unwrap();
        let v = [1.0, -1.0, -1.0, 1.0, 1.0];
        assert!(der_log_fd_error(&mut j, &v) < 1e-6);
        let mut lt = j.lookup(&v);
        let changes = [(0, -1.0), (2, 1.0), (4, -1.0)];
        let next = [-1.0, -1.0, 1.0, 1.0, -1.0];
        let diff = j.log_val_diff(&v, &changes, &lt);
        assert!((diff - (j.log_val(&next) - j.log_val(&v))).norm() < 1e-13);
        j.update_lookup(&v, &changes, &mut lt);
        for (x, y) in lt.iter().zip(j.lookup(&next)) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
