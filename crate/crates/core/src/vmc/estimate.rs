use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::Machine;
use crate::operator::Operator;
use crate::sampler::Samples;
use crate::scalar::{czero, Real, C};
use crate::stats::chain_statistics;

/// `E_loc(σ) = Σ_σ' <σ|H|σ'> Ψ(σ')/Ψ(σ)`.
pub fn local_energy<T: Real, M: Machine<T> + ?Sized>(op: &Operator<T>, machine: &M, v: &[T]) -> Result<C<T>> {
    let log_psi = machine.try_log_val(v)?;
    if !log_psi.re.is_finite() {
        return Err(Error::NonFinite(format!("log Ψ({v:?}) = {log_psi}; the local energy is undefined")));
    }
    let lt = machine.lookup(v);
    let mut e = czero();
    let mut changes = Vec::new();
    for (next, mel) in op.connected_elements(v)? {
        changes.clear();
        changes.extend(next.iter().enumerate().filter(|(i, x)| **x != v[*i]).map(|(i, &x)| (i, x)));
        if changes.is_empty() {
            e += mel;
            continue;
        }
        let ratio = machine.log_val_diff(v, &changes, &lt).exp();
        if !(ratio.re.is_finite() && ratio.im.is_finite()) {
            return Err(Error::NonFinite(format!("amplitude ratio Ψ({next:?})/Ψ({v:?}) = {ratio}")));
        }
        e += mel * ratio;
    }
    Ok(e)
}

/// [`local_energy`] for every configuration, evaluated in parallel.
pub fn local_energies<T: Real, M: Machine<T> + ?Sized>(
    op: &Operator<T>,
    machine: &M,
    configs: &[Vec<T>],
) -> Result<Vec<C<T>>> {
    configs.par_iter().map(|v| local_energy(op, machine, v)).collect()
}

/// `O_k(σ)` for every configuration, evaluated in parallel.
pub fn log_derivatives<T: Real, M: Machine<T> + ?Sized>(machine: &M, configs: &[Vec<T>]) -> Vec<Vec<C<T>>> {
    configs.par_iter().map(|v| machine.der_log(v)).collect()
}

/// Estimate of an operator's expectation value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats<T> {
    /// Mean of `Re E_loc`.
    pub mean: T,
    /// Mean of `Im E_loc`; close to zero for Hermitian operators.
    pub mean_imag: T,
    /// Error of the mean (0 under full enumeration).
    pub sigma: T,
    pub taucorr: T,
    /// `<|E_loc|^2> - |<E_loc>|^2`, not clamped.
    pub variance: T,
}

/// Normalized sample weights: `π` under enumeration, else uniform.
pub(crate) fn sample_weights<T: Real>(samples: &Samples<T>) -> Result<Vec<T>> {
    let n = samples.len();
    match &samples.weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: w.len() });
            }
            Ok(w.clone())
        }
        None => Ok(vec![T::one() / T::of_usize(n); n]),
    }
}

/// Statistics of per-sample local values.
pub fn stats_from_local<T: Real>(values: &[C<T>], samples: &Samples<T>) -> Result<EnergyStats<T>> {
    if values.len() != samples.len() {
        return Err(Error::DimensionMismatch { expected: samples.len(), found: values.len() });
    }
    if values.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {}", values.len())));
    }
    let w = sample_weights(samples)?;
    let mean: C<T> = values.iter().zip(&w).fold(czero(), |acc, (e, &wi)| acc + e * wi);
    let variance = values.iter().zip(&w).map(|(e, &wi)| (e - mean).norm_sqr() * wi).sum::<T>();
    let (sigma, taucorr) = if samples.weights.is_some() {
        (T::zero(), T::zero())
    } else {
        let re: Vec<T> = values.iter().map(|e| e.re).collect();
        let chains: Vec<Vec<T>> = samples.by_chain(&re).into_iter().map(<[T]>::to_vec).collect();
        let s = chain_statistics(&chains)?;
        (s.sigma, s.taucorr)
    };
    Ok(EnergyStats {
        mean: mean.re,
        mean_imag: mean.im,
        sigma,
        taucorr,
        variance,
    })
}

/// Energy statistics of `op` on a sample set.
pub fn estimate_energy<T: Real, M: Machine<T> + ?Sized>(
    op: &Operator<T>,
    machine: &M,
    samples: &Samples<T>,
) -> Result<EnergyStats<T>> {
    let e = local_energies(op, machine, &samples.configs)?;
    stats_from_local(&e, samples)
}

/// `F_k = <O_k* E_loc> - <O_k*><E_loc>`, i.e. `∂<H>/∂α_k*`.
pub fn estimate_gradient<T: Real, M: Machine<T> + ?Sized>(
    op: &Operator<T>,
    machine: &M,
    samples: &Samples<T>,
) -> Result<Vec<C<T>>> {
    let e = local_energies(op, machine, &samples.configs)?;
    let cov = Covariance::new(log_derivatives(machine, &samples.configs), sample_weights(samples)?)?;
    Ok(cov.force(&e))
}

/// Centered log-derivatives of a weighted sample set. Provides the force
/// `F` and products with `S_kk' = <O_k* O_k'> - <O_k*><O_k'>`.
#[derive(Clone, Debug)]
pub struct Covariance<T> {
    centered: Vec<Vec<C<T>>>,
    weights: Vec<T>,
    n_par: usize,
}

impl<T: Real> Covariance<T> {
    pub fn new(der_logs: Vec<Vec<C<T>>>, weights: Vec<T>) -> Result<Self> {
        if der_logs.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: der_logs.len(), found: weights.len() });
        }
        let n_par = der_logs.first().map_or(0, Vec::len);
        let mut mean = vec![czero::<T>(); n_par];
        for (o, &w) in der_logs.iter().zip(&weights) {
            if o.len() != n_par {
                return Err(Error::DimensionMismatch { expected: n_par, found: o.len() });
            }
            for (m, x) in mean.iter_mut().zip(o) {
                *m += x * w;
            }
        }
        let centered = der_logs
            .into_iter()
            .map(|o| o.into_iter().zip(&mean).map(|(x, m)| x - m).collect())
            .collect();
        Ok(Covariance { centered, weights, n_par })
    }

    pub fn n_par(&self) -> usize {
        self.n_par
    }

    pub fn n_samples(&self) -> usize {
        self.weights.len()
    }

    /// `F_k = Σ_i w_i conj(O_ik - <O_k>) E_i`.
    pub fn force(&self, e: &[C<T>]) -> Vec<C<T>> {
        let mut f = vec![czero::<T>(); self.n_par];
        for ((o, &w), &ei) in self.centered.iter().zip(&self.weights).zip(e) {
            let c = ei * w;
            for (fk, ok) in f.iter_mut().zip(o) {
                *fk += ok.conj() * c;
            }
        }
        f
    }

    /// `S x`, without forming `S`.
    pub fn apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut y = vec![czero::<T>(); self.n_par];
        for (o, &w) in self.centered.iter().zip(&self.weights) {
            let proj = o.iter().zip(x).fold(czero::<T>(), |acc, (a, b)| acc + a * b) * w;
            for (yk, ok) in y.iter_mut().zip(o) {
                *yk += ok.conj() * proj;
            }
        }
        y
    }

    /// Dense `S`.
    pub fn matrix(&self) -> crate::linalg::DenseMatrix<T> {
        let m = self.n_par;
        let mut s = crate::linalg::DenseMatrix::zeros(m, m);
        for (o, &w) in self.centered.iter().zip(&self.weights) {
            for k in 0..m {
                let a = o[k].conj() * w;
                for l in 0..m {
                    s[(k, l)] += a * o[l];
                }
            }
        }
        s
    }
}
