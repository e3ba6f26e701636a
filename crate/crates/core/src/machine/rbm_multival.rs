use crate::error::{Error, Result};
use crate::scalar::{creal, czero, ln_cosh, tanh, Real, C};

use super::{check_n_par, LookupTable, Machine};

/// RBM over one-hot encoded local values, for local dimension `d >= 2`.
///
/// Site `i` holding the `k`-th local value switches on visible unit
/// `i*d + k` and leaves the other `d-1` units of that site at zero:
///
/// ```text
/// log Ψ(σ) = Σ_i a_{i,k_i} + Σ_j ln 2cosh(b_j + Σ_i W_{j,(i,k_i)})
/// ```
///
/// Parameter layout: `[a (N*d), b (M), W (M x N*d, row-major)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmMultiVal<T> {
    local_values: Vec<T>,
    n_sites: usize,
    n_hidden: usize,
    a: Vec<C<T>>,
    b: Vec<C<T>>,
    w: Vec<C<T>>,
}

impl<T: Real> RbmMultiVal<T> {
    pub fn new(local_values: Vec<T>, n_sites: usize, n_hidden: usize) -> Result<Self> {
        if local_values.len() < 2 {
            return Err(Error::invalid("RbmMultiVal needs at least two local values"));
        }
        let nv = n_sites * local_values.len();
        Ok(RbmMultiVal {
            local_values,
            n_sites,
            n_hidden,
            a: vec![czero(); nv],
            b: vec![czero(); n_hidden],
            w: vec![czero(); nv * n_hidden],
        })
    }

    pub fn local_size(&self) -> usize {
        self.local_values.len()
    }

    /// Index of the active visible unit of every site.
    pub fn encode(&self, v: &[T]) -> Result<Vec<usize>> {
        let d = self.local_size();
        v.iter()
            .enumerate()
            .map(|(i, x)| {
                self.local_values
                    .iter()
                    .position(|l| l == x)
                    .map(|k| i * d + k)
                    .ok_or_else(|| Error::InvalidConfiguration(format!("{x} is not a local value")))
            })
            .collect()
    }

    fn active(&self, v: &[T]) -> Vec<usize> {
        assert_eq!(v.len(), self.n_sites, "configuration length");
        self.encode(v).expect("configuration in the local basis")
    }

    fn theta_active(&self, on: &[usize]) -> Vec<C<T>> {
        let nv = self.a.len();
        (0..self.n_hidden)
            .map(|j| on.iter().fold(self.b[j], |acc, &u| acc + self.w[j * nv + u]))
            .collect()
    }
}

impl<T: Real> Machine<T> for RbmMultiVal<T> {
    fn kind(&self) -> &'static str {
        "RbmMultiVal"
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.n_sites, self.local_size(), self.n_hidden]
    }

    fn n_visible(&self) -> usize {
        self.n_sites
    }

    fn n_par(&self) -> usize {
        let nv = self.a.len();
        nv + self.n_hidden + nv * self.n_hidden
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
        let (nv, m) = (self.a.len(), self.n_hidden);
        self.a.copy_from_slice(&p[..nv]);
        self.b.copy_from_slice(&p[nv..nv + m]);
        self.w.copy_from_slice(&p[nv + m..]);
        Ok(())
    }

    fn log_val(&self, v: &[T]) -> C<T> {
        let on = self.active(v);
        let linear = on.iter().fold(czero(), |acc, &u| acc + self.a[u]);
        let ln2 = creal(T::LN_2());
        self.theta_active(&on)
            .into_iter()
            .fold(linear, |acc, t| acc + ln_cosh(t) + ln2)
    }

    fn der_log(&self, v: &[T]) -> Vec<C<T>> {
        let on = self.active(v);
        let nv = self.a.len();
        let one = creal(T::one());
        let mut out = vec![czero(); self.n_par()];
        for &u in &on {
            out[u] = one;
        }
        let t: Vec<C<T>> = self.theta_active(&on).into_iter().map(tanh).collect();
        for (j, &tj) in t.iter().enumerate() {
            out[nv + j] = tj;
            let base = nv + self.n_hidden + j * nv;
            for &u in &on {
                out[base + u] = tj;
            }
        }
        out
    }

    fn lookup(&self, v: &[T]) -> LookupTable<T> {
        self.theta_active(&self.active(v))
    }

    fn log_val_diff(&self, v: &[T], changes: &[(usize, T)], lt: &LookupTable<T>) -> C<T> {
        let nv = self.a.len();
        let moves = self.unit_moves(v, changes);
        let mut diff = czero();
        for &(off, on) in &moves {
            diff += self.a[on] - self.a[off];
        }
        for (j, &theta) in lt.iter().enumerate() {
            let shifted = moves
                .iter()
                .fold(theta, |acc, &(off, on)| acc + self.w[j * nv + on] - self.w[j * nv + off]);
            diff += ln_cosh(shifted) - ln_cosh(theta);
        }
        diff
    }

    fn update_lookup(&self, v: &[T], changes: &[(usize, T)], lt: &mut LookupTable<T>) {
        let nv = self.a.len();
        let moves = self.unit_moves(v, changes);
        for (j, theta) in lt.iter_mut().enumerate() {
            for &(off, on) in &moves {
                *theta += self.w[j * nv + on] - self.w[j * nv + off];
            }
        }
    }
}

impl<T: Real> RbmMultiVal<T> {
    /// `(unit switched off, unit switched on)` per changed site.
    fn unit_moves(&self, v: &[T], changes: &[(usize, T)]) -> Vec<(usize, usize)> {
        let d = self.local_size();
        let pos = |x: T| self.local_values.iter().position(|l| *l == x).expect("local value");
        changes
            .iter()
            .map(|&(i, x)| (i * d + pos(v[i]), i * d + pos(x)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::{all_spin_states, der_log_fd_error};
    use super::super::RbmSpin;
    use super::*;
    use num_complex::Complex64;

    fn spin1_states(n: usize) -> Vec<Vec<f64>> {
        (0..3usize.pow(n as u32))
            .map(|mut c| {
                (0..n)
                    .map(|_| {
                        let k = c % 3;
                        c /= 3;
                        [-1.0, 0.0, 1.0][k]
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn zero_parameters() {
        let m = RbmMultiVal::<f64>::new(vec![-1.0, 0.0, 1.0], 3, 5).unwrap();
        let lv = m.log_val(&[1.0, 0.0, -1.0]);
        assert!((lv.re - 5.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn two_values_reduce_to_spin_rbm() {
        let (n, m) = (4, 3);
        let mut spin = RbmSpin::<f64>::new(n, m);
        spin.init_random_parameters(8, 0.4).unwrap();
        let p = spin.parameters();
        let (a, b, w) = (&p[..n], &p[n..n + m], &p[n + m..]);
        // σ = -1 -> unit (i,0), σ = +1 -> unit (i,1); a_{i0} = -a_i, a_{i1} = a_i, same for W
        let nv = 2 * n;
        let mut q = vec![Complex64::new(0.0, 0.0); nv + m + nv * m];
        for i in 0..n {
            q[2 * i] = -a[i];
            q[2 * i + 1] = a[i];
        }
        q[nv..nv + m].copy_from_slice(b);
        for j in 0..m {
            for i in 0..n {
                q[nv + m + j * nv + 2 * i] = -w[j * n + i];
                q[nv + m + j * nv + 2 * i + 1] = w[j * n + i];
            }
        }
        let mut mv = RbmMultiVal::new(vec![-1.0, 1.0], n, m).unwrap();
        mv.set_parameters(&q).unwrap();
        for v in all_spin_states(n) {
            assert!((mv.log_val(&v) - spin.log_val(&v)).norm() < 1e-12);
        }
    }

    #[test]
    fn spin_one_matches_explicit_one_hot() {
        let (n, m, d) = (2, 3, 3);
        let mut mv = RbmMultiVal::<f64>::new(vec![-1.0, 0.0, 1.0], n, m).unwrap();
        mv.init_random_parameters(5, 0.5).unwrap();
        let p = mv.parameters();
        let nv = n * d;
        for v in spin1_states(n) {
            let x: Vec<f64> = (0..nv)
                .map(|u| {
                    let (i, k) = (u / d, u % d);
                    if [-1.0, 0.0, 1.0][k] == v[i] { 1.0 } else { 0.0 }
                })
                .collect();
            let mut lv = Complex64::new(0.0, 0.0);
            for u in 0..nv {
                lv += p[u] * x[u];
            }
            for j in 0..m {
                let mut theta = p[nv + j];
                for u in 0..nv {
                    theta += p[nv + m + j * nv + u] * x[u];
                }
                lv += (2.0 * theta.cosh()).ln();
            }
            assert!((mv.log_val(&v) - lv).norm() < 1e-12);
        }
    }

    #[test]
    fn der_log_and_diff() {
        let mut mv = RbmMultiVal::<f64>::new(vec![0.0, 1.0, 2.0], 3, 4).unwrap();
        mv.init_random_parameters(13, 0.2).unwrap();
        let v = [2.0, 0.0, 1.0];
        assert!(der_log_fd_error(&mut mv, &v) < 1e-6);
        let mut lt = mv.lookup(&v);
        let changes = [(0, 1.0), (2, 0.0)];
        let next = [1.0, 0.0, 0.0];
        let diff = mv.log_val_diff(&v, &changes, &lt);
        assert!((diff - (mv.log_val(&next) - mv.log_val(&v))).norm() < 1e-12);
        mv.update_lookup(&v, &changes, &mut lt);
        for (x, y) in lt.iter().zip(mv.lookup(&next)) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let mv = RbmMultiVal::<f64>::new(vec![0.0, 1.0, 2.0], 2, 1).unwrap();
        assert!(mv.encode(&[0.0, 3.0]).is_err());
        assert!(RbmMultiVal::<f64>::new(vec![0.0], 2, 1).is_err());
    }
}
