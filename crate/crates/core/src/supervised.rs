//! Supervised learning of a target wavefunction by minimizing the negative
//! log overlap
//! `L = -ln(|<Ψ_tar|Ψ>|² / (<Ψ_tar|Ψ_tar><Ψ|Ψ>))`.
//!
//! The gradient is `∂L/∂α_k* = <O_k*>_Ψ - <r* O_k*>_tar / <r*>_tar` with
//! `r = Ψ/Ψ_tar`; the first expectation is over `|Ψ|²`, the second over
//! `|Ψ_tar|²`.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::hilbert::HilbertIndex;
use crate::io::log::RunLog;
use crate::io::{wf::write_wf, with_extension, write_atomic};
use crate::machine::Machine;
use crate::optimizer::Optimizer;
use crate::sampler::exact_distribution;
use crate::scalar::{cplx, czero, Real, C};

/// Spaces up to this size get exact model expectations.
pub const MAX_FULL_SUM_STATES: usize = 1 << 16;

/// Configurations with target log-amplitudes `ln Ψ_tar(σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedDataset<T> {
    samples: Vec<Vec<T>>,
    targets: Vec<C<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetEntry {
    state: Vec<f64>,
    log_psi: [f64; 2],
}

impl<T: Real> SupervisedDataset<T> {
    pub fn new(samples: Vec<Vec<T>>, targets: Vec<C<T>>) -> Result<Self> {
        if samples.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: samples.len(), found: targets.len() });
        }
        if samples.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        if let Some(k) = targets.iter().position(|t| t.re.is_nan() || t.im.is_nan() || t.re == T::infinity()) {
            return Err(Error::NonFinite(format!("target {k} is {}", targets[k])));
        }
        if targets.iter().all(|t| t.re == T::neg_infinity()) {
            return Err(Error::invalid("every target amplitude is zero"));
        }
        Ok(SupervisedDataset { samples, targets })
    }

    /// Every state of `index` with amplitudes `psi` (logs taken on the
    /// principal branch; zeros become `-inf`).
    pub fn from_amplitudes(index: &HilbertIndex<T>, psi: &[C<T>]) -> Result<Self> {
        if psi.len() != index.n_states() {
            return Err(Error::DimensionMismatch { expected: index.n_states(), found: psi.len() });
        }
        let targets = psi
            .iter()
            .map(|z| if z.norm_sqr() == T::zero() { cplx(T::neg_infinity(), T::zero()) } else { z.ln() })
            .collect();
        Self::new(index.states().collect(), targets)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<T>] {
        &self.samples
    }

    pub fn targets(&self) -> &[C<T>] {
        &self.targets
    }

    /// `|Ψ_tar|²`, normalized over the dataset.
    pub fn target_probabilities(&self) -> Vec<T> {
        let l2: Vec<T> = self.targets.iter().map(|t| t.re * T::of(2.0)).collect();
        let max = l2.iter().copied().fold(T::neg_infinity(), T::max);
        let w: Vec<T> = l2.iter().map(|&x| (x - max).exp()).collect();
        let z: T = w.iter().copied().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    /// Reads a JSON list of `{"state": [...], "log_psi": [re, im]}`.
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let entries: Vec<DatasetEntry> = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: format!("{}: {}", path.display(), e.path()),
            message: e.inner().to_string(),
        })?;
        let (samples, targets) = entries
            .into_iter()
            .map(|e| {
                let s: Vec<T> = e.state.into_iter().map(T::of).collect();
                (s, cplx(T::of(e.log_psi[0]), T::of(e.log_psi[1])))
            })
            .unzip();
        Self::new(samples, targets)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let entries: Vec<DatasetEntry> = self
            .samples
            .iter()
            .zip(&self.targets)
            .map(|(s, t)| DatasetEntry {
                state: s.iter().map(|x| x.as_f64()).collect(),
                log_psi: [t.re.as_f64(), t.im.as_f64()],
            })
            .collect();
        write_atomic(path, serde_json::to_string(&entries)?.as_bytes())
    }
}

/// Loss value with its overlap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlap<T> {
    /// `-ln overlap`; `T::max_value()` when the states are orthogonal.
    pub loss: T,
    /// Normalized squared overlap in `[0, 1]`.
    pub overlap: T,
    pub orthogonal: bool,
}

/// `ln Σ exp(x_i)` over complex `x`, as `(shift, Σ exp(x_i - shift))`.
fn shifted_sum<T: Real>(x: impl Iterator<Item = C<T>> + Clone) -> (T, C<T>) {
    let shift = x.clone().map(|z| z.re).fold(T::neg_infinity(), T::max);
    if !shift.is_finite() {
        return (shift, czero());
    }
    let s = x.fold(czero::<T>(), |acc, z| acc + (z - shift).exp());
    (shift, s)
}

fn machine_logs<T: Real, M: Machine<T> + ?Sized>(machine: &M, samples: &[Vec<T>]) -> Result<Vec<C<T>>> {
    samples.par_iter().map(|s| machine.try_log_val(s)).collect()
}

/// Overlap loss by summation over the dataset states. Exact when the
/// dataset enumerates the whole space.
pub fn overlap_loss<T: Real, M: Machine<T> + ?Sized>(machine: &M, data: &SupervisedDataset<T>) -> Result<Overlap<T>> {
    let lm = machine_logs(machine, &data.samples)?;
    overlap_from_logs(&lm, &data.targets)
}

/// Overlap loss with `<Ψ|Ψ>` summed over every state of `index`, for
/// datasets that list only the target support.
pub fn overlap_loss_in<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    data: &SupervisedDataset<T>,
    index: &HilbertIndex<T>,
) -> Result<Overlap<T>> {
    if index.n_states() > MAX_FULL_SUM_STATES {
        return Err(Error::SpaceTooLarge {
            n_states: index.n_states() as u128,
            limit: MAX_FULL_SUM_STATES as u128,
        });
    }
    let lm = machine_logs(machine, &data.samples)?;
    let all: Vec<Vec<T>> = index.states().collect();
    let norm = machine_logs(machine, &all)?;
    overlap_parts(&lm, &data.targets, &norm)
}

/// Overlap estimated from a batch drawn from `|Ψ_tar|²`:
/// `|<r>|² / <|r|²>` with `r = Ψ/Ψ_tar`.
pub fn overlap_sampled<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    data: &SupervisedDataset<T>,
    batch: &[usize],
) -> Result<Overlap<T>> {
    let kept: Vec<usize> = batch.iter().copied().filter(|&i| data.targets[i].re.is_finite()).collect();
    if kept.is_empty() {
        return Err(Error::invalid("no batch entry has a nonzero target amplitude"));
    }
    let states: Vec<Vec<T>> = kept.iter().map(|&i| data.samples[i].clone()).collect();
    let lm = machine_logs(machine, &states)?;
    let lr: Vec<C<T>> = lm.iter().zip(&kept).map(|(m, &i)| m - data.targets[i]).collect();
    // ln r on a uniform target reproduces the estimator through the same sums.
    let zeros = vec![czero::<T>(); lr.len()];
    overlap_parts(&lr, &zeros, &lr)
}

fn overlap_from_logs<T: Real>(lm: &[C<T>], lt: &[C<T>]) -> Result<Overlap<T>> {
    overlap_parts(lm, lt, lm)
}

/// `|Σ Ψ_tar* Ψ|² / (Σ |Ψ_tar|² Σ |Ψ|²)` with the last sum over `norm`.
fn overlap_parts<T: Real>(lm: &[C<T>], lt: &[C<T>], norm: &[C<T>]) -> Result<Overlap<T>> {
    let two = T::of(2.0);
    let (sa, a) = shifted_sum(lm.iter().zip(lt).map(|(m, t)| m + t.conj()));
    let (sb, b) = shifted_sum(lt.iter().map(|t| cplx(t.re * two, T::zero())));
    let (sc, c) = shifted_sum(norm.iter().map(|m| cplx(m.re * two, T::zero())));
    if !sc.is_finite() || c.re == T::zero() {
        return Err(Error::invalid("machine amplitude vanishes on every dataset state"));
    }
    if !sa.is_finite() || a.norm() == T::zero() {
        return Ok(Overlap { loss: T::max_value(), overlap: T::zero(), orthogonal: true });
    }
    let log_overlap = two * (sa + a.norm().ln()) - (sb + b.re.ln()) - (sc + c.re.ln());
    let log_overlap = log_overlap.min(T::zero());
    Ok(Overlap { loss: -log_overlap, overlap: log_overlap.exp(), orthogonal: false })
}

/// How the `<O_k*>_Ψ` term is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum ModelTerm<'a, T> {
    /// Exact sum over every state of the space.
    FullSum(&'a HilbertIndex<T>),
    /// Self-normalized importance weighting of the target batch by `|r|²`.
    Importance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapGradient<T> {
    pub grad: Vec<C<T>>,
    /// Batch entries skipped because their target amplitude is zero.
    pub excluded: usize,
}

fn weighted_conj_mean<T: Real>(ders: &[Vec<C<T>>], w: &[C<T>]) -> Vec<C<T>> {
    let n_par = ders.first().map_or(0, Vec::len);
    let mut out = vec![czero::<T>(); n_par];
    let z = w.iter().fold(czero::<T>(), |acc, x| acc + x);
    for (o, wi) in ders.iter().zip(w) {
        for (acc, ok) in out.iter_mut().zip(o) {
            *acc += ok.conj() * wi;
        }
    }
    out.into_iter().map(|x| x / z).collect()
}

/// Gradient from a batch drawn from `|Ψ_tar|²` (indices into `data`,
/// repeats allowed).
pub fn overlap_gradient<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    data: &SupervisedDataset<T>,
    batch: &[usize],
    model: ModelTerm<'_, T>,
) -> Result<OverlapGradient<T>> {
    let kept: Vec<usize> = batch.iter().copied().filter(|&i| data.targets[i].re.is_finite()).collect();
    let excluded = batch.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::invalid("no batch entry has a nonzero target amplitude"));
    }
    let states: Vec<Vec<T>> = kept.iter().map(|&i| data.samples[i].clone()).collect();
    let lm = machine_logs(machine, &states)?;
    let ders: Vec<Vec<C<T>>> = states.par_iter().map(|s| machine.der_log(s)).collect();
    // ln r = ln Ψ - ln Ψ_tar, shifted so the largest |r| is 1
    let lr: Vec<C<T>> = lm.iter().zip(&kept).map(|(m, &i)| m - data.targets[i]).collect();
    let shift = lr.iter().map(|z| z.re).fold(T::neg_infinity(), T::max);
    if !shift.is_finite() {
        return Err(Error::invalid("machine amplitude vanishes on every batch state"));
    }
    let r_conj: Vec<C<T>> = lr.iter().map(|z| (z - shift).exp().conj()).collect();
    let data_term = weighted_conj_mean(&ders, &r_conj);

    let model_term = match model {
        ModelTerm::Importance => {
            let w: Vec<C<T>> = r_conj.iter().map(|r| cplx(r.norm_sqr(), T::zero())).collect();
            weighted_conj_mean(&ders, &w)
        }
        ModelTerm::FullSum(index) => {
            if index.n_states() > MAX_FULL_SUM_STATES {
                return Err(Error::SpaceTooLarge {
                    n_states: index.n_states() as u128,
                    limit: MAX_FULL_SUM_STATES as u128,
                });
            }
            let pi = exact_distribution(machine, index)?;
            let all: Vec<Vec<T>> = index.states().collect();
            let ders: Vec<Vec<C<T>>> = all.par_iter().map(|s| machine.der_log(s)).collect();
            let w: Vec<C<T>> = pi.into_iter().map(|p| cplx(p, T::zero())).collect();
            weighted_conj_mean(&ders, &w)
        }
    };
    let grad = model_term.iter().zip(&data_term).map(|(m, d)| m - d).collect();
    Ok(OverlapGradient { grad, excluded })
}

/// Exact gradient: data term summed over the whole dataset with weights
/// `|Ψ_tar|²`, model term summed over the dataset states. Exact when the
/// dataset enumerates the whole space.
pub fn overlap_gradient_full<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    data: &SupervisedDataset<T>,
) -> Result<Vec<C<T>>> {
    let lm = machine_logs(machine, &data.samples)?;
    let ders: Vec<Vec<C<T>>> = data.samples.par_iter().map(|s| machine.der_log(s)).collect();
    // Ψ* Ψ_tar and |Ψ|², both shifted
    let x: Vec<C<T>> = lm.iter().zip(&data.targets).map(|(m, t)| m.conj() + t).collect();
    let sx = x.iter().map(|z| z.re).fold(T::neg_infinity(), T::max);
    let sm = lm.iter().map(|z| z.re).fold(T::neg_infinity(), T::max);
    if !sx.is_finite() || !sm.is_finite() {
        return Err(Error::invalid("overlap is zero; the gradient is undefined"));
    }
    let c: Vec<C<T>> = x.iter().map(|z| (z - sx).exp()).collect();
    let p: Vec<C<T>> = lm.iter().map(|z| cplx(((z.re - sm) * T::of(2.0)).exp(), T::zero())).collect();
    let data_term = weighted_conj_mean(&ders, &c);
    let model_term = weighted_conj_mean(&ders, &p);
    Ok(model_term.iter().zip(&data_term).map(|(m, d)| m - d).collect())
}

/// Accepted loss names. `Overlap_phi` is the same loss under another name.
pub const LOSS_NAMES: [&str; 2] = ["overlap", "Overlap_phi"];

fn default_loss() -> String {
    "overlap".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisedConfig {
    pub n_iter: usize,
    pub batch_size: usize,
    #[serde(default = "default_loss")]
    pub loss: String,
}

impl SupervisedConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        if !LOSS_NAMES.contains(&self.loss.as_str()) {
            return Err(Error::invalid(format!(
                "unknown loss {:?}; supported: {}",
                self.loss,
                LOSS_NAMES.join(", ")
            )));
        }
        if self.batch_size == 0 || self.batch_size > dataset_len {
            return Err(Error::invalid(format!(
                "batch_size must be in 1..={dataset_len}, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedRecord<T> {
    pub iteration: usize,
    /// Overlap of the parameters used for this iteration's gradient: exact
    /// when the space is enumerable, else estimated from the batch.
    pub overlap: Overlap<T>,
    pub excluded: usize,
}

impl<T: Real> SupervisedRecord<T> {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "Iteration": self.iteration,
            "Overlap": { "Mean": self.overlap.overlap.as_f64() },
            "LogOverlap": { "Mean": -self.overlap.loss.as_f64() },
        })
    }
}

/// Trains `machine` on `data`. Batches are drawn with replacement from
/// `|Ψ_tar|²` using a ChaCha8 stream seeded with `seed`. `index` enables the
/// exact model term and exact overlaps when the space is small enough.
#[allow(clippy::too_many_arguments)]
pub fn run_supervised<T: Real, M: Machine<T> + ?Sized>(
    config: &SupervisedConfig,
    machine: &mut M,
    optimizer: &mut Optimizer<T>,
    data: &SupervisedDataset<T>,
    index: Option<&HilbertIndex<T>>,
    seed: u64,
    output_prefix: Option<&Path>,
) -> Result<Vec<SupervisedRecord<T>>> {
    config.validate(data.len())?;
    if let Some(s) = data.samples.iter().find(|s| s.len() != machine.n_visible()) {
        return Err(Error::DimensionMismatch { expected: machine.n_visible(), found: s.len() });
    }
    let model_index = index.filter(|i| i.n_states() <= MAX_FULL_SUM_STATES);
    let probs: Vec<f64> = data.target_probabilities().iter().map(|p| p.as_f64()).collect();
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = output_prefix.map(RunLog::create).transpose()?;
    let mut out = Vec::with_capacity(config.n_iter);
    for it in 0..config.n_iter {
        let batch: Vec<usize> = (0..config.batch_size).map(|_| dist.sample(&mut rng)).collect();
        let overlap = match model_index {
            Some(index) => overlap_loss_in(&*machine, data, index)?,
            None => overlap_sampled(&*machine, data, &batch)?,
        };
        let model = model_index.map_or(ModelTerm::Importance, ModelTerm::FullSum);
        let g = overlap_gradient(&*machine, data, &batch, model)?;
        let mut p = machine.parameters();
        optimizer
            .update_complex(&mut p, &g.grad)
            .map_err(|e| Error::NonFinite(format!("iteration {it}: {e}")))?;
        machine.set_parameters(&p)?;
        let rec = SupervisedRecord { iteration: it, overlap, excluded: g.excluded };
        if let Some(log) = log.as_mut() {
            log.push(&rec.to_json())?;
        }
        out.push(rec);
    }
    if let Some(prefix) = output_prefix {
        write_wf(&with_extension(prefix, "wf"), &*machine)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::full_ed;
    use crate::hilbert::HilbertSpace;
    use crate::lattice::Graph;
    use crate::machine::{Lookup, RbmSpin};
    use crate::operator::{heisenberg, ising};
    use crate::optimizer::Rule;
    use crate::scalar::{creal, dot, norm_sqr};

    fn ising_target(n: usize) -> (HilbertIndex<f64>, Vec<C<f64>>) {
        let g = Graph::hypercube(n, 1, true).unwrap();
        let hs = HilbertSpace::spin(0.5, &g, None).unwrap();
        let op = ising(&hs, &g, 1.0).unwrap();
        let gs = full_ed(&op, true).unwrap().eigenvectors.unwrap().swap_remove(0);
        (hs.index().unwrap(), gs)
    }

    fn rbm(n: usize, m: usize, sigma: f64, seed: u64) -> RbmSpin<f64> {
        let mut r = RbmSpin::new(n, m);
        r.init_random_parameters(seed, sigma).unwrap();
        r
    }

    fn dense_overlap<M: Machine<f64>>(m: &M, index: &HilbertIndex<f64>, target: &[C<f64>]) -> f64 {
        let psi: Vec<C<f64>> = index.states().map(|s| m.log_val(&s).exp()).collect();
        dot(target, &psi).norm_sqr() / (norm_sqr(target) * norm_sqr(&psi))
    }

    #[test]
    fn identical_states_have_zero_loss() {
        let (index, gs) = ising_target(6);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let m = Lookup::from_amplitudes(index.clone(), &gs).unwrap();
        let o = overlap_loss(&m, &data).unwrap();
        assert!(o.loss.abs() < 1e-12 && (o.overlap - 1.0).abs() < 1e-12);
        let g = overlap_gradient_full(&m, &data).unwrap();
        assert!(g.iter().all(|x| x.norm() < 1e-10));
    }

    #[test]
    fn orthogonal_states_are_flagged() {
        let hs = HilbertSpace::<f64>::spin_sites(0.5, 1, None).unwrap();
        let index = hs.index().unwrap();
        let data = SupervisedDataset::from_amplitudes(&index, &[creal(1.0), creal(0.0)]).unwrap();
        let m = Lookup::from_amplitudes(index.clone(), &[creal(0.0), creal(1.0)]).unwrap();
        let o = overlap_loss(&m, &data).unwrap();
        assert!(o.orthogonal);
        assert_eq!(o.loss, f64::MAX);
        assert_eq!(o.overlap, 0.0);
    }

    #[test]
    fn loss_matches_dense_inner_product() {
        let (index, gs) = ising_target(10);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let m = rbm(10, 6, 0.3, 4);
        let o = overlap_loss(&m, &data).unwrap();
        let want = dense_overlap(&m, &index, &gs);
        assert!((o.loss + want.ln()).abs() < 1e-10);
        assert!(o.overlap > 0.0 && o.overlap <= 1.0);
    }

    #[test]
    fn loss_is_invariant_under_rescaling() {
        let (index, gs) = ising_target(4);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let m = rbm(4, 3, 0.4, 8);
        let logs: Vec<C<f64>> = index.states().map(|s| m.log_val(&s)).collect();
        let c = cplx(-3.0f64, 2.0);
        let scaled: Vec<C<f64>> = logs.iter().map(|l| (l.exp()) * c).collect();
        let m2 = Lookup::from_amplitudes(index.clone(), &scaled).unwrap();
        let a = overlap_loss(&m, &data).unwrap().loss;
        let b = overlap_loss(&m2, &data).unwrap().loss;
        assert!((a - b).abs() < 1e-12);
    }

    fn fd_check(data: &SupervisedDataset<f64>, m: &mut RbmSpin<f64>, grad: &[C<f64>]) -> f64 {
        let p0 = m.parameters();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..p0.len() {
            let mut d = [0.0; 2];
            for (part, shift) in [cplx(h, 0.0), cplx(0.0, h)].into_iter().enumerate() {
                let mut p = p0.clone();
                p[k] = p0[k] + shift;
                m.set_parameters(&p).unwrap();
                let up = overlap_loss(&*m, data).unwrap().loss;
                p[k] = p0[k] - shift;
                m.set_parameters(&p).unwrap();
                let down = overlap_loss(&*m, data).unwrap().loss;
                d[part] = (up - down) / (2.0 * h);
            }
            m.set_parameters(&p0).unwrap();
            let fd = cplx(d[0], d[1]) * 0.5;
            worst = worst.max((fd - grad[k]).norm() / grad[k].norm().max(1.0));
        }
        worst
    }

    #[test]
    fn full_gradient_matches_finite_differences() {
        let (index, gs) = ising_target(4);
        // Complex target with a nontrivial phase.
        let target: Vec<C<f64>> = gs.iter().enumerate().map(|(i, a)| a * cplx(0.0, 0.3 * i as f64).exp()).collect();
        let data = SupervisedDataset::from_amplitudes(&index, &target).unwrap();
        let mut m = rbm(4, 3, 0.3, 2);
        let g = overlap_gradient_full(&m, &data).unwrap();
        let worst = fd_check(&data, &mut m, &g);
        assert!(worst <= 1e-6, "{worst}");
        // The batch form with every state weighted by its probability and
        // the exact model term gives the same vector.
        let probs = data.target_probabilities();
        let mut batch = Vec::new();
        for (i, p) in probs.iter().enumerate() {
            batch.extend(std::iter::repeat_n(i, (p * 1e5).round() as usize));
        }
        let gb = overlap_gradient(&m, &data, &batch, ModelTerm::FullSum(&index)).unwrap();
        let err = gb.grad.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn uniform_visible_bias_is_flat_in_fixed_magnetization() {
        let g = Graph::hypercube(4, 1, true).unwrap();
        let hs = HilbertSpace::spin(0.5, &g, Some(0.0)).unwrap();
        let op = heisenberg(&hs, &g).unwrap();
        let index = hs.index().unwrap();
        let gs = full_ed(&op, true).unwrap().eigenvectors.unwrap().swap_remove(0);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let m = rbm(4, 4, 0.3, 6);
        let f = overlap_gradient_full(&m, &data).unwrap();
        // Directional derivative along Re a_i += t for all i is 2 Re Σ F_{a_i}.
        let dir: f64 = f[..4].iter().map(|x| 2.0 * x.re).sum();
        assert!(dir.abs() < 1e-10, "{dir}");
    }

    #[test]
    fn zero_targets_are_excluded_from_batches() {
        let hs = HilbertSpace::<f64>::spin_sites(0.5, 2, None).unwrap();
        let index = hs.index().unwrap();
        let amps = [creal(1.0), creal(0.0), creal(0.5), creal(0.5)];
        let data = SupervisedDataset::from_amplitudes(&index, &amps).unwrap();
        let m = rbm(2, 2, 0.2, 1);
        let g = overlap_gradient(&m, &data, &[0, 1, 2, 1], ModelTerm::Importance).unwrap();
        assert_eq!(g.excluded, 2);
        assert!(g.grad.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
    }

    #[test]
    fn rejects_unknown_loss_and_bad_batch() {
        let cfg = SupervisedConfig { n_iter: 1, batch_size: 4, loss: "mse".into() };
        let err = cfg.validate(10).unwrap_err().to_string();
        assert!(err.contains("mse") && err.contains("overlap"), "{err}");
        let cfg = SupervisedConfig { n_iter: 1, batch_size: 11, loss: "overlap".into() };
        assert!(cfg.validate(10).is_err());
    }

    #[test]
    fn zero_iterations_leave_machine_unchanged() {
        let (index, gs) = ising_target(4);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let mut m = rbm(4, 3, 0.1, 1);
        let before = m.parameters();
        let mut opt = Optimizer::new(Rule::ada_max()).unwrap();
        let cfg = SupervisedConfig { n_iter: 0, batch_size: 8, loss: "overlap".into() };
        let out = run_supervised(&cfg, &mut m, &mut opt, &data, Some(&index), 1, None).unwrap();
        assert!(out.is_empty());
        assert_eq!(m.parameters(), before);
    }

    #[test]
    fn full_batch_sgd_decreases_loss() {
        let (index, gs) = ising_target(6);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let mut m = rbm(6, 6, 0.05, 3);
        let mut opt = Optimizer::new(Rule::sgd(1e-3)).unwrap();
        let mut last = overlap_loss(&m, &data).unwrap().loss;
        for _ in 0..50 {
            let g = overlap_gradient_full(&m, &data).unwrap();
            let mut p = m.parameters();
            opt.update_complex(&mut p, &g).unwrap();
            m.set_parameters(&p).unwrap();
            let now = overlap_loss(&m, &data).unwrap().loss;
            assert!(now < last, "{now} >= {last}");
            last = now;
        }
    }

    #[test]
    fn support_only_dataset_uses_full_norm() {
        let (index, gs) = ising_target(6);
        let m = rbm(6, 4, 0.3, 9);
        // Keep half of the states as the target support.
        let masked: Vec<C<f64>> = gs.iter().enumerate().map(|(i, a)| if i % 2 == 0 { *a } else { czero() }).collect();
        let data = SupervisedDataset::from_amplitudes(&index, &masked).unwrap();
        let support: Vec<usize> = (0..index.n_states()).step_by(2).collect();
        let sub = SupervisedDataset::new(
            support.iter().map(|&i| data.samples()[i].clone()).collect(),
            support.iter().map(|&i| data.targets()[i]).collect(),
        )
        .unwrap();
        let want = dense_overlap(&m, &index, &masked);
        assert!((overlap_loss(&m, &data).unwrap().overlap - want).abs() < 1e-12);
        assert!((overlap_loss_in(&m, &sub, &index).unwrap().overlap - want).abs() < 1e-12);
    }

    #[test]
    fn sampled_overlap_converges_to_exact() {
        let (index, gs) = ising_target(8);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let m = rbm(8, 4, 0.2, 5);
        let exact = overlap_loss(&m, &data).unwrap().overlap;
        let probs: Vec<f64> = data.target_probabilities();
        let dist = WeightedIndex::new(&probs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let batch: Vec<usize> = (0..200_000).map(|_| dist.sample(&mut rng)).collect();
        let est = overlap_sampled(&m, &data, &batch).unwrap().overlap;
        assert!((est - exact).abs() < 5e-3, "{est} vs {exact}");
    }

    #[test]
    fn dataset_json_round_trip() {
        let (index, gs) = ising_target(3);
        let data = SupervisedDataset::from_amplitudes(&index, &gs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        data.write_json(&path).unwrap();
        assert_eq!(SupervisedDataset::<f64>::read_json(&path).unwrap(), data);
    }
}
