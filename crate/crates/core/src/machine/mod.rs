//! Variational wavefunctions `σ -> log Ψ(σ)` with complex parameters.
//!
//! Every machine exposes its parameters as one flat complex vector. The
//! layout is documented on each type and is what `.wf` files store.

mod ffnn;
mod jastrow;
mod lookup;
mod rbm;
mod rbm_multival;
mod rbm_symm;

pub use ffnn::{Activation, Ffnn, LayerSpec};
pub use jastrow::Jastrow;
pub use lookup::Lookup;
pub use rbm::RbmSpin;
pub use rbm_multival::RbmMultiVal;
pub use rbm_symm::RbmSpinSymm;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::{cplx, Real, C};

/// Auxiliary per-configuration data a machine may cache between moves.
pub type LookupTable<T> = Vec<C<T>>;

pub trait Machine<T: Real>: Send + Sync {
    /// Short identifier used in parameter files.
    fn kind(&self) -> &'static str;

    /// Shape metadata stored beside the parameters in `.wf` files.
    fn shape(&self) -> Vec<usize>;

    fn n_visible(&self) -> usize;

    fn n_par(&self) -> usize;

    fn parameters(&self) -> Vec<C<T>>;

    fn set_parameters(&mut self, p: &[C<T>]) -> Result<()>;

    /// `log Ψ(σ)`. Panics if `σ.len() != n_visible()`.
    fn log_val(&self, v: &[T]) -> C<T>;

    /// `O_k(σ) = ∂ log Ψ(σ) / ∂α_k` in parameter order.
    fn der_log(&self, v: &[T]) -> Vec<C<T>>;

    /// Cache for fast [`Machine::log_val_diff`]; empty by default.
    fn lookup(&self, _v: &[T]) -> LookupTable<T> {
        Vec::new()
    }

    /// `log Ψ(σ') - log Ψ(σ)` where `σ'` is `σ` with `changes` applied.
    fn log_val_diff(&self, v: &[T], changes: &[(usize, T)], _lt: &LookupTable<T>) -> C<T> {
        let mut next = v.to_vec();
        for &(i, x) in changes {
            next[i] = x;
        }
        self.log_val(&next) - self.log_val(v)
    }

    /// Brings `lt` from `σ` to `σ'`; `v` is the configuration before the move.
    fn update_lookup(&self, v: &[T], changes: &[(usize, T)], lt: &mut LookupTable<T>) {
        if lt.is_empty() {
            return;
        }
        let mut next = v.to_vec();
        for &(i, x) in changes {
            next[i] = x;
        }
        *lt = self.lookup(&next);
    }

    /// Checked version of [`Machine::log_val`].
    fn try_log_val(&self, v: &[T]) -> Result<C<T>> {
        check_len(self.n_visible(), v)?;
        Ok(self.log_val(v))
    }

    /// Draws every real and imaginary part from `N(0, sigma^2)`.
    fn init_random_parameters(&mut self, seed: u64, sigma: T) -> Result<()> {
        let p = random_parameters(self.n_par(), seed, sigma)?;
        self.set_parameters(&p)
    }
}

pub(crate) fn check_len<T>(expected: usize, v: &[T]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_n_par<T>(expected: usize, p: &[C<T>]) -> Result<()> {
    if p.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: p.len(),
        });
    }
    Ok(())
}

/// Seeded complex Gaussian vector; `sigma = 0` gives exact zeros.
pub fn random_parameters<T: Real>(n: usize, seed: u64, sigma: T) -> Result<Vec<C<T>>> {
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    if sigma == T::zero() {
        return Ok(vec![cplx(T::zero(), T::zero()); n]);
    }
    let normal = Normal::new(0.0, sigma.as_f64()).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            cplx(T::of(re), T::of(im))
        })
        .collect())
}

impl<T: Real> Machine<T> for Box<dyn Machine<T>> {
    fn kind(&self) -> &'static str {
        (**self).kind()
    }
    fn shape(&self) -> Vec<usize> {
        (**self).shape()
    }
    fn n_visible(&self) -> usize {
        (**self).n_visible()
    }
    fn n_par(&self) -> usize {
        (**self).n_par()
    }
    fn parameters(&self) -> Vec<C<T>> {
        (**self).parameters()
    }
    fn set_parameters(&mut self, p: &[C<T>]) -> Result<()> {
        (**self).set_parameters(p)
    }
    fn log_val(&self, v: &[T]) -> C<T> {
        (**self).log_val(v)
    }
    fn der_log(&self, v: &[T]) -> Vec<C<T>> {
        (**self).der_log(v)
    }
    fn lookup(&self, v: &[T]) -> LookupTable<T> {
        (**self).lookup(v)
    }
    fn log_val_diff(&self, v: &[T], changes: &[(usize, T)], lt: &LookupTable<T>) -> C<T> {
        (**self).log_val_diff(v, changes, lt)
    }
    fn update_lookup(&self, v: &[T], changes: &[(usize, T)], lt: &mut LookupTable<T>) {
        (**self).update_lookup(v, changes, lt)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_gives_zeros() {
        let p = random_parameters::<f64>(10, 3, 0.0).unwrap();
        assert!(p.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = random_parameters::<f64>(50, 1234, 0.01).unwrap();
        let b = random_parameters::<f64>(50, 1234, 0.01).unwrap();
        assert_eq!(a, b);
        let c = random_parameters::<f64>(50, 1235, 0.01).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(random_parameters::<f64>(3, 0, -1.0).is_err());
        assert!(random_parameters::<f64>(3, 0, f64::NAN).is_err());
    }

    #[test]
    fn random_parameter_moments() {
        // 460 complex parameters = 920 Gaussian draws with sigma 0.01.
        let sigma = 0.01;
        let p = random_parameters::<f64>(460, 99, sigma).unwrap();
        let draws: Vec<f64> = p.iter().flat_map(|z| [z.re, z.im]).collect();
        let n = draws.len() as f64;
        let mean_abs = draws.iter().map(|x| x.abs()).sum::<f64>() / n;
        // E|x| = sigma sqrt(2/pi), Var|x| = sigma^2 (1 - 2/pi)
        let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
        let se = sigma * (1.0 - 2.0 / std::f64::consts::PI).sqrt() / n.sqrt();
        assert!((mean_abs - expected).abs() < 5.0 * se, "{mean_abs} vs {expected}");
        let mean = draws.iter().sum::<f64>() / n;
        assert!(mean.abs() < 5.0 * sigma / n.sqrt());
    }
}
