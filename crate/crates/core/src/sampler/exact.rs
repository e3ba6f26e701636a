use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::HilbertIndex;
use crate::machine::Machine;
use crate::scalar::Real;

/// Largest space the exact sampler will normalize.
pub const MAX_EXACT_STATES: usize = 1 << 20;

/// `π(σ) = |Ψ(σ)|² / Σ|Ψ|²` in index order, normalized in log space.
pub fn exact_distribution<T: Real, M: Machine<T> + ?Sized>(machine: &M, index: &HilbertIndex<T>) -> Result<Vec<T>> {
    if index.n_states() > MAX_EXACT_STATES {
        return Err(Error::SpaceTooLarge {
            n_states: index.n_states() as u128,
            limit: MAX_EXACT_STATES as u128,
        });
    }
    let log2: Vec<T> = index
        .states()
        .map(|s| machine.try_log_val(&s).map(|l| T::of(2.0) * l.re))
        .collect::<Result<_>>()?;
    let max = log2.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return Err(Error::NonFinite(format!("wavefunction has no finite amplitude (max log|Ψ|² = {max})")));
    }
    let w: Vec<T> = log2.iter().map(|&l| (l - max).exp()).collect();
    let z: T = w.iter().copied().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// `n` i.i.d. draws from the exact `π`.
pub fn exact_sample<T: Real, M: Machine<T> + ?Sized, R: Rng + ?Sized>(
    machine: &M,
    index: &HilbertIndex<T>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<T>>> {
    let pi = exact_distribution(machine, index)?;
    let dist = WeightedIndex::new(pi.iter().map(|p| p.as_f64())).map_err(|e| Error::invalid(e.to_string()))?;
    (0..n).map(|_| index.number_to_state(dist.sample(rng))).collect()
}
