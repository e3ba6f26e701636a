//! Monte Carlo statistics over chain-structured series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats<T> {
    pub mean: T,
    /// Error of the mean.
    pub sigma: T,
    /// Integrated autocorrelation time estimate, clipped at 0.
    pub taucorr: T,
    /// Plain sample variance.
    pub variance: T,
}

/// Number of bins per chain used by the binning estimator.
pub const N_BINS: usize = 16;

/// Statistics of `chains`, each a series of consecutive samples.
///
/// Each chain is cut into bins of `len / 16` (at least 1) consecutive points;
/// trailing points that do not fill a bin are left out of the binned
/// estimates. `sigma = sqrt(var(bin means) / n_bins)` over the bins of all
/// chains, and `taucorr = max(0, (bin_size * var(bin means) / variance - 1) / 2)`.
pub fn chain_statistics<T: Real>(chains: &[Vec<T>]) -> Result<SeriesStats<T>> {
    let total: usize = chains.iter().map(Vec::len).sum();
    if total < 2 {
        return Err(Error::invalid(format!("need at least 2 points, got {total}")));
    }
    let n = T::of_usize(total);
    let mean = chains.iter().flatten().copied().sum::<T>() / n;
    let variance = chains.iter().flatten().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());

    let shortest = chains.iter().map(Vec::len).filter(|&l| l > 0).min().unwrap_or(0);
    let bin = (shortest / N_BINS).max(1);
    let bin_means: Vec<T> = chains
        .iter()
        .flat_map(|c| c.chunks_exact(bin).map(|b| b.iter().copied().sum::<T>() / T::of_usize(bin)))
        .collect();
    let nb = bin_means.len();
    let (sigma, taucorr) = if nb < 2 {
        ((variance / n).sqrt(), T::zero())
    } else {
        let nbf = T::of_usize(nb);
        let bm = bin_means.iter().copied().sum::<T>() / nbf;
        let var_bins = bin_means.iter().map(|&x| (x - bm) * (x - bm)).sum::<T>() / (nbf - T::one());
        let tau = if variance > T::zero() {
            (T::of(0.5) * (T::of_usize(bin) * var_bins / variance - T::one())).max(T::zero())
        } else {
            T::zero()
        };
        ((var_bins / nbf).sqrt(), tau)
    };
    Ok(SeriesStats {
        mean,
        sigma,
        taucorr,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn constant_series() {
        let s = chain_statistics(&[vec![2.5; 100], vec![2.5; 100]]).unwrap();
        assert_eq!(s, SeriesStats { mean: 2.5, sigma: 0.0, taucorr: 0.0, variance: 0.0 });
    }

    #[test]
    fn iid_normals() {
        let n = 100_000;
        let s = chain_statistics(&[normals(n, 1)]).unwrap();
        let expected = 1.0 / (n as f64).sqrt();
        assert!((s.sigma - expected).abs() < 0.2 * expected, "{}", s.sigma);
        assert!(s.taucorr < 0.5);
        assert!((s.variance - 1.0).abs() < 0.02);
    }

    #[test]
    fn duplicated_series_is_correlated() {
        let base = normals(1000, 2);
        let dup: Vec<f64> = base.iter().flat_map(|&x| std::iter::repeat_n(x, 16)).collect();
        let s = chain_statistics(&[dup]).unwrap();
        assert!(s.taucorr > 1.0, "{}", s.taucorr);
    }

    #[test]
    fn too_few_points() {
        assert!(chain_statistics::<f64>(&[vec![1.0]]).is_err());
        assert!(chain_statistics::<f64>(&[]).is_err());
        let s = chain_statistics(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(s.mean, 2.0);
    }

    #[test]
    fn chain_permutation_invariance() {
        let a = normals(300, 3);
        let b = normals(300, 4);
        let c = normals(300, 5);
        let s1 = chain_statistics(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let s2 = chain_statistics(&[c, a, b]).unwrap();
        assert!((s1.mean - s2.mean).abs() < 1e-14);
        assert!((s1.sigma - s2.sigma).abs() < 1e-14);
        assert!((s1.taucorr - s2.taucorr).abs() < 1e-12);
        assert!((s1.variance - s2.variance).abs() < 1e-14);
    }

    #[test]
    fn affine_equivariance() {
        let x = vec![normals(512, 6), normals(512, 7)];
        let (a, b) = (-3.0, 1.5);
        let y: Vec<Vec<f64>> = x.iter().map(|c| c.iter().map(|v| a * v + b).collect()).collect();
        let sx = chain_statistics(&x).unwrap();
        let sy = chain_statistics(&y).unwrap();
        assert!((sy.mean - (a * sx.mean + b)).abs() < 1e-12);
        assert!((sy.sigma - a.abs() * sx.sigma).abs() < 1e-12);
        assert!((sy.variance - a * a * sx.variance).abs() < 1e-10);
        assert!((sy.taucorr - sx.taucorr).abs() < 1e-10);
    }
}
