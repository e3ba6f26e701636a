use crate::error::Result;
use crate::scalar::{creal, czero, ln_cosh, tanh, Real, C};

use super::{check_n_par, LookupTable, Machine};

/// Restricted Boltzmann machine for spin-1/2 systems,
///
/// ```text
/// log Ψ(σ) = Σ_i a_i σ_i + Σ_j ln 2cosh(θ_j),   θ_j = b_j + Σ_i W_ji σ_i
/// ```
///
/// Parameter layout: `[a (N), b (M), W (M x N, row-major)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmSpin<T> {
    n_visible: usize,
    n_hidden: usize,
    a: Vec<C<T>>,
    b: Vec<C<T>>,
    w: Vec<C<T>>,
}

impl<T: Real> RbmSpin<T> {
    /// Zero-initialized machine.
    pub fn new(n_visible: usize, n_hidden: usize) -> Self {
        RbmSpin {
            n_visible,
            n_hidden,
            a: vec![czero(); n_visible],
            b: vec![czero(); n_hidden],
            w: vec![czero(); n_visible * n_hidden],
        }
    }

    /// `n_hidden = alpha * n_visible`.
    pub fn with_density(n_visible: usize, alpha: usize) -> Self {
        Self::new(n_visible, alpha * n_visible)
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn visible_bias(&self) -> &[C<T>] {
        &self.a
    }

    pub fn hidden_bias(&self) -> &[C<T>] {
        &self.b
    }

    /// Weights, `M x N` row-major.
    pub fn weights(&self) -> &[C<T>] {
        &self.w
    }

    /// Hidden-unit inputs `θ_j`.
    pub fn theta(&self, v: &[T]) -> Vec<C<T>> {
        let n = self.n_visible;
        (0..self.n_hidden)
            .map(|j| {
                let row = &self.w[j * n..(j + 1) * n];
                row.iter().zip(v).fold(self.b[j], |acc, (w, &s)| acc + *w * s)
            })
            .collect()
    }

    fn ln_2cosh(theta: C<T>) -> C<T> {
        ln_cosh(theta) + creal(T::LN_2())
    }
}

impl<T: Real> Machine<T> for RbmSpin<T> {
    fn kind(&self) -> &'static str {
        "RbmSpin"
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.n_visible, self.n_hidden]
    }

    fn n_visible(&self) -> usize {
        self.n_visible
    }

    fn n_par(&self) -> usize {
        self.n_visible + self.n_hidden + self.n_visible * self.n_hidden
    }

    fn parameters(&self) -> Vec<C<T>> {
        let mut p = Vec::with_capacity(self.n_par());
        p.extend_from_slice(&self.a);
        p.extend_from_slice(&self.b);
        p.extend_from_slice(&self.w);
        p
    }

    fn set_parameters(&mut self, p: &[C<T>]) -> Result<()> {
        check_n_par(self.n_par(), p)?;
        let (n, m) = (self.n_visible, self.n_hidden);
        self.a.copy_from_slice(&p[..n]);
        self.b.copy_from_slice(&p[n..n + m]);
        self.w.copy_from_slice(&p[n + m..]);
        Ok(())
    }

    fn log_val(&self, v: &[T]) -> C<T> {
        assert_eq!(v.len(), self.n_visible, "configuration length");
        let linear = self.a.iter().zip(v).fold(czero(), |acc, (a, &s)| acc + *a * s);
        self.theta(v).into_iter().fold(linear, |acc, t| acc + Self::ln_2cosh(t))
    }

    fn der_log(&self, v: &[T]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.n_visible, "configuration length");
        let mut out = Vec::with_capacity(self.n_par());
        out.extend(v.iter().map(|&s| creal(s)));
        let t: Vec<C<T>> = self.theta(v).into_iter().map(tanh).collect();
        out.extend_from_slice(&t);
        for tj in &t {
            out.extend(v.iter().map(|&s| *tj * s));
        }
        out
    }

    fn lookup(&self, v: &[T]) -> LookupTable<T> {
        self.theta(v)
    }

    fn log_val_diff(&self, v: &[T], changes: &[(usize, T)], lt: &LookupTable<T>) -> C<T> {
        let n = self.n_visible;
        let mut diff = czero();
        for &(i, x) in changes {
            diff += self.a[i] * (x - v[i]);
        }
        for (j, &theta) in lt.iter().enumerate() {
            let row = &self.w[j * n..(j + 1) * n];
            let shifted = changes.iter().fold(theta, |acc, &(i, x)| acc + row[i] * (x - v[i]));
            diff += ln_cosh(shifted) - ln_cosh(theta);
        }
        diff
    }

    fn update_lookup(&self, v: &[T], changes: &[(usize, T)], lt: &mut LookupTable<T>) {
        let n = self.n_visible;
        for (j, theta) in lt.iter_mut().enumerate() {
            let row = &self.w[j * n..(j + 1) * n];
            for &(i, x) in changes {
                *theta += row[i] * (x - v[i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::{all_spin_states, der_log_fd_error};
    use super::*;
    use num_complex::Complex64;

    fn random_rbm(n: usize, m: usize, seed: u64, sigma: f64) -> RbmSpin<f64> {
        let mut r = RbmSpin::new(n, m);
        r.init_random_parameters(seed, sigma).unwrap();
        r
    }

    #[test]
    fn zero_parameters_give_m_ln2() {
        let r = RbmSpin::<f64>::new(7, 20);
        for v in all_spin_states(7).iter().step_by(13) {
            assert!((r.log_val(v) - Complex64::new(20.0 * std::f64::consts::LN_2, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_unit_closed_form() {
        let mut r = RbmSpin::<f64>::new(1, 1);
        r.set_parameters(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            .unwrap();
        let expected = (2.0 * 1f64.cosh()).ln();
        assert!((r.log_val(&[1.0]).re - expected).abs() < 1e-14);
    }

    #[test]
    fn matches_explicit_hidden_sum() {
        let r = random_rbm(4, 3, 7, 0.5);
        let p = r.parameters();
        let (a, b, w) = (&p[..4], &p[4..7], &p[7..]);
        for v in all_spin_states(4) {
            let mut psi = Complex64::new(0.0, 0.0);
            for h in all_spin_states(3) {
                let mut e = Complex64::new(0.0, 0.0);
                for i in 0..4 {
                    e += a[i] * v[i];
                }
                for j in 0..3 {
                    e += b[j] * h[j];
                    for i in 0..4 {
                        e += w[j * 4 + i] * h[j] * v[i];
                    }
                }
                psi += e.exp();
            }
            assert!((r.log_val(&v).exp() - psi).norm() < 1e-12 * psi.norm());
        }
    }

    #[test]
    fn der_log_against_finite_differences() {
        let mut r = random_rbm(5, 4, 11, 0.1);
        for v in all_spin_states(5).iter().step_by(5) {
            assert!(der_log_fd_error(&mut r, v) < 1e-6);
            let d = r.der_log(v);
            for i in 0..5 {
                assert_eq!(d[i], Complex64::new(v[i], 0.0));
            }
        }
    }

    #[test]
    fn parameters_round_trip() {
        let mut r = random_rbm(3, 2, 1, 0.3);
        let p = r.parameters();
        let mut q = RbmSpin::new(3, 2);
        q.set_parameters(&p).unwrap();
        assert_eq!(q, r);
        assert!(r.set_parameters(&p[1..]).is_err());
    }

    #[test]
    fn log_val_diff_and_lookup_updates() {
        let r = random_rbm(6, 5, 3, 0.3);
        let v = vec![1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let mut lt = r.lookup(&v);
        let changes = [(1, 1.0), (4, 1.0)];
        let mut next = v.clone();
        next[1] = 1.0;
        next[4] = 1.0;
        let diff = r.log_val_diff(&v, &changes, &lt);
        assert!((diff - (r.log_val(&next) - r.log_val(&v))).norm() < 1e-12);
        r.update_lookup(&v, &changes, &mut lt);
        for (x, y) in lt.iter().zip(r.theta(&next)) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn finite_for_large_parameters() {
        let mut r = RbmSpin::<f64>::new(20, 20);
        r.set_parameters(&vec![Complex64::new(10.0, 3.0); r.n_par()]).unwrap();
        let v = vec![1.0; 20];
        let lv = r.log_val(&v);
        assert!(lv.re.is_finite() && lv.im.is_finite());
        assert!(r.der_log(&v).iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn f32_agrees_with_f64() {
        let r = random_rbm(4, 4, 5, 0.2);
        let mut r32 = RbmSpin::<f32>::new(4, 4);
        let p32: Vec<_> = r.parameters().iter().map(|z| num_complex::Complex32::new(z.re as f32, z.im as f32)).collect();
        r32.set_parameters(&p32).unwrap();
        let v = [1.0, -1.0, -1.0, 1.0];
        let v32 = [1.0f32, -1.0, -1.0, 1.0];
        let a = r.log_val(&v);
        let b = r32.log_val(&v32);
        assert!((a.re - b.re as f64).abs() < 1e-5 && (a.im - b.im as f64).abs() < 1e-5);
    }
}
