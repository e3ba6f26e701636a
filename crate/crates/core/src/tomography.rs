//! Quantum state reconstruction from projective measurements in local
//! Pauli bases.
//!
//! A record `(b, σ^b)` has probability `π_b(σ^b) = |[U_b Ψ](σ^b)|² / Σ|Ψ|²`
//! where `U_b` is a tensor product of single-site rotations. Training
//! minimizes the negative log-likelihood of the records with gradient
//! `<O_k*>_π - mean_records O_k^rot*`, `O_k^rot = ∂ ln[U_b Ψ](σ^b) / ∂α_k`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::hilbert::HilbertIndex;
use crate::io::log::RunLog;
use crate::io::{wf::write_wf, with_extension, write_atomic};
use crate::linalg::DenseMatrix;
use crate::machine::Machine;
use crate::optimizer::Optimizer;
use crate::sampler::{Sampler, Samples};
use crate::scalar::{cplx, czero, dot, norm_sqr, Real, C};
use crate::vmc::sample_weights;

/// Largest number of non-Z sites in one record.
pub const MAX_ROTATED_SITES: usize = 16;

/// Spaces up to this size get exact normalization.
pub const MAX_EXACT_NORM_STATES: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    /// Single-site rotation; rows are outcomes and columns reference states,
    /// both ordered `(+1, -1)`.
    pub fn matrix<T: Real>(self) -> DenseMatrix<T> {
        let h = T::of(0.5).sqrt();
        let r = |x: f64, y: f64| cplx(T::of(x) * h, T::of(y) * h);
        let rows = match self {
            Basis::Z => return DenseMatrix::identity(2),
            Basis::X => vec![vec![r(1.0, 0.0), r(1.0, 0.0)], vec![r(1.0, 0.0), r(-1.0, 0.0)]],
            Basis::Y => vec![vec![r(1.0, 0.0), r(0.0, -1.0)], vec![r(1.0, 0.0), r(0.0, 1.0)]],
        };
        DenseMatrix::from_rows(&rows).expect("2x2")
    }

    fn symbol(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }
}

/// Parses a basis string such as `"XZY"`.
pub fn parse_bases(s: &str) -> Result<Vec<Basis>> {
    s.chars()
        .map(|c| match c {
            'X' | 'x' => Ok(Basis::X),
            'Y' | 'y' => Ok(Basis::Y),
            'Z' | 'z' => Ok(Basis::Z),
            other => Err(Error::invalid(format!("unknown basis letter {other:?} in {s:?}; expected X, Y or Z"))),
        })
        .collect()
}

pub fn bases_to_string(b: &[Basis]) -> String {
    b.iter().map(|x| x.symbol()).collect()
}

fn outcome_index<T: Real>(v: T) -> Result<usize> {
    if v == T::one() {
        Ok(0)
    } else if v == -T::one() {
        Ok(1)
    } else {
        Err(Error::InvalidConfiguration(format!("measurement outcome {v} is not ±1")))
    }
}

fn outcome_value<T: Real>(i: usize) -> T {
    if i == 0 {
        T::one()
    } else {
        -T::one()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord<T> {
    pub basis: Vec<Basis>,
    pub outcome: Vec<T>,
}

impl<T: Real> MeasurementRecord<T> {
    pub fn new(basis: Vec<Basis>, outcome: Vec<T>) -> Result<Self> {
        if basis.len() != outcome.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: outcome.len() });
        }
        for &v in &outcome {
            outcome_index(v)?;
        }
        Ok(MeasurementRecord { basis, outcome })
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match parse_bases(s)?.as_slice() {
            [b] => Ok(*b),
            _ => Err(Error::invalid(format!("expected a single basis letter, got {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordEntry {
    basis: String,
    outcome: Vec<f64>,
}

/// Reads a JSON list of `{"basis": "XZ..", "outcome": [±1, ...]}`.
pub fn read_records<T: Real>(path: &Path) -> Result<Vec<MeasurementRecord<T>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let entries: Vec<RecordEntry> = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: format!("{}: {}", path.display(), e.path()),
        message: e.inner().to_string(),
    })?;
    entries
        .into_iter()
        .map(|e| MeasurementRecord::new(parse_bases(&e.basis)?, e.outcome.into_iter().map(T::of).collect()))
        .collect()
}

pub fn write_records<T: Real>(path: &Path, records: &[MeasurementRecord<T>]) -> Result<()> {
    let entries: Vec<RecordEntry> = records
        .iter()
        .map(|r| RecordEntry {
            basis: bases_to_string(&r.basis),
            outcome: r.outcome.iter().map(|x| x.as_f64()).collect(),
        })
        .collect();
    write_atomic(path, serde_json::to_string(&entries)?.as_bytes())
}

/// Reference states reachable from a record with `ln` of their rotation
/// coefficient.
fn expansion<T: Real>(record: &MeasurementRecord<T>) -> Result<Vec<(Vec<T>, C<T>)>> {
    let rotated: Vec<usize> = (0..record.basis.len()).filter(|&i| record.basis[i] != Basis::Z).collect();
    if rotated.len() > MAX_ROTATED_SITES {
        return Err(Error::invalid(format!(
            "record rotates {} sites; at most {MAX_ROTATED_SITES} are supported",
            rotated.len()
        )));
    }
    let mats: Vec<DenseMatrix<T>> = rotated.iter().map(|&i| record.basis[i].matrix()).collect();
    let rows: Vec<usize> = rotated.iter().map(|&i| outcome_index(record.outcome[i])).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(1 << rotated.len());
    for mask in 0..1usize << rotated.len() {
        let mut state = record.outcome.clone();
        let mut log_c = czero::<T>();
        for (k, &site) in rotated.iter().enumerate() {
            let col = (mask >> k) & 1;
            state[site] = outcome_value(col);
            log_c += mats[k][(rows[k], col)].ln();
        }
        out.push((state, log_c));
    }
    Ok(out)
}

fn check_record<T: Real, M: Machine<T> + ?Sized>(machine: &M, record: &MeasurementRecord<T>) -> Result<()> {
    if record.outcome.len() != machine.n_visible() {
        return Err(Error::DimensionMismatch { expected: machine.n_visible(), found: record.outcome.len() });
    }
    Ok(())
}

/// Terms `ln c_j + ln Ψ(σ_j)` of the rotated amplitude, with their states.
fn rotated_terms<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    record: &MeasurementRecord<T>,
) -> Result<(Vec<Vec<T>>, Vec<C<T>>)> {
    check_record(machine, record)?;
    let (states, log_c): (Vec<Vec<T>>, Vec<C<T>>) = expansion(record)?.into_iter().unzip();
    let terms = states
        .iter()
        .zip(&log_c)
        .map(|(s, c)| Ok(c + machine.try_log_val(s)?))
        .collect::<Result<Vec<_>>>()?;
    Ok((states, terms))
}

/// `(shift, Σ exp(z_j - shift))`.
fn log_sum_exp<T: Real>(z: &[C<T>]) -> (T, C<T>) {
    let shift = z.iter().map(|x| x.re).fold(T::neg_infinity(), T::max);
    if !shift.is_finite() {
        return (shift, czero());
    }
    (shift, z.iter().fold(czero::<T>(), |acc, x| acc + (x - shift).exp()))
}

/// `ln [U_b Ψ](σ^b)`; the real part is `-inf` where the amplitude vanishes.
pub fn rotated_log_amplitude<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    record: &MeasurementRecord<T>,
) -> Result<C<T>> {
    let (_, terms) = rotated_terms(machine, record)?;
    if let [single] = terms.as_slice() {
        return Ok(*single);
    }
    let (shift, s) = log_sum_exp(&terms);
    if s.norm() == T::zero() {
        return Ok(cplx(T::neg_infinity(), T::zero()));
    }
    Ok(s.ln() + shift)
}

/// `∂ ln [U_b Ψ](σ^b) / ∂α_k`.
pub fn rotated_der_log<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    record: &MeasurementRecord<T>,
) -> Result<Vec<C<T>>> {
    let (states, terms) = rotated_terms(machine, record)?;
    let (shift, s) = log_sum_exp(&terms);
    if s.norm() == T::zero() {
        return Err(Error::NonFinite(format!(
            "rotated amplitude vanishes for basis {}",
            bases_to_string(&record.basis)
        )));
    }
    let mut out = vec![czero::<T>(); machine.n_par()];
    for (st, z) in states.iter().zip(&terms) {
        let w = (z - shift).exp() / s;
        for (acc, o) in out.iter_mut().zip(machine.der_log(st)) {
            *acc += o * w;
        }
    }
    Ok(out)
}

/// How `Σ_σ |Ψ(σ)|²` is obtained.
#[derive(Clone, Copy, Debug)]
pub enum Normalization<'a, T> {
    /// Full sum over the space.
    Exact(&'a HilbertIndex<T>),
    /// `|space| · mean |Ψ|²` over uniformly drawn states (approximate).
    Uniform { index: &'a HilbertIndex<T>, n_samples: usize, seed: u64 },
}

/// `ln Σ |Ψ|²` and whether it is exact.
pub fn log_norm<T: Real, M: Machine<T> + ?Sized>(machine: &M, norm: Normalization<'_, T>) -> Result<(T, bool)> {
    let (states, scale, exact): (Vec<Vec<T>>, T, bool) = match norm {
        Normalization::Exact(index) => {
            if index.n_states() > MAX_EXACT_NORM_STATES {
                return Err(Error::SpaceTooLarge {
                    n_states: index.n_states() as u128,
                    limit: MAX_EXACT_NORM_STATES as u128,
                });
            }
            (index.states().collect(), T::zero(), true)
        }
        Normalization::Uniform { index, n_samples, seed } => {
            if n_samples == 0 {
                return Err(Error::invalid("uniform normalization needs n_samples > 0"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = index.n_states();
            let states = (0..n_samples)
                .map(|_| index.number_to_state(rng.random_range(0..n)))
                .collect::<Result<Vec<_>>>()?;
            (states, (T::of_usize(n) / T::of_usize(n_samples)).ln(), false)
        }
    };
    let two = T::of(2.0);
    let logs: Vec<C<T>> = states
        .par_iter()
        .map(|s| machine.try_log_val(s).map(|l| cplx(l.re * two, T::zero())))
        .collect::<Result<_>>()?;
    let (shift, s) = log_sum_exp(&logs);
    if !shift.is_finite() {
        return Err(Error::invalid("machine amplitude vanishes everywhere"));
    }
    Ok((shift + s.re.ln() + scale, exact))
}

/// Distinct records with multiplicities, in order of first appearance.
fn distinct_records<T: Real>(records: &[MeasurementRecord<T>]) -> Vec<(&MeasurementRecord<T>, usize)> {
    let mut seen: HashMap<(Vec<Basis>, Vec<bool>), usize> = HashMap::new();
    let mut out: Vec<(&MeasurementRecord<T>, usize)> = Vec::new();
    for r in records {
        let key = (r.basis.clone(), r.outcome.iter().map(|&v| v > T::zero()).collect());
        match seen.get(&key) {
            Some(&i) => out[i].1 += 1,
            None => {
                seen.insert(key, out.len());
                out.push((r, 1));
            }
        }
    }
    out
}

/// Negative log-likelihood per record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nll<T> {
    pub value: T,
    /// False when the normalization was estimated.
    pub exact: bool,
}

pub fn nll_loss<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    records: &[MeasurementRecord<T>],
    norm: Normalization<'_, T>,
) -> Result<Nll<T>> {
    if records.is_empty() {
        return Err(Error::invalid("measurement dataset is empty"));
    }
    nll_distinct(machine, &distinct_records(records), records.len(), norm)
}

fn nll_distinct<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    distinct: &[(&MeasurementRecord<T>, usize)],
    n_records: usize,
    norm: Normalization<'_, T>,
) -> Result<Nll<T>> {
    let (ln_z, exact) = log_norm(machine, norm)?;
    let total = distinct
        .par_iter()
        .map(|(r, count)| rotated_log_amplitude(machine, r).map(|l| l.re * T::of(2.0) * T::of_usize(*count)))
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::zero(), |a, b| a + b);
    Ok(Nll { value: ln_z - total / T::of_usize(n_records), exact })
}

/// Gradient of the NLL. `weights` (summing to 1) replace the uniform
/// average over `records`; `model` supplies `<O_k*>_π` and may be weighted.
pub fn nll_gradient<T: Real, M: Machine<T> + ?Sized>(
    machine: &M,
    records: &[MeasurementRecord<T>],
    weights: Option<&[T]>,
    model: &Samples<T>,
) -> Result<Vec<C<T>>> {
    if records.is_empty() {
        return Err(Error::invalid("measurement batch is empty"));
    }
    if let Some(w) = weights {
        if w.len() != records.len() {
            return Err(Error::DimensionMismatch { expected: records.len(), found: w.len() });
        }
    }
    let n_par = machine.n_par();
    let (batch, bw): (Vec<&MeasurementRecord<T>>, Vec<T>) = match weights {
        Some(w) => (records.iter().collect(), w.to_vec()),
        None => {
            let n = T::of_usize(records.len());
            distinct_records(records).into_iter().map(|(r, c)| (r, T::of_usize(c) / n)).unzip()
        }
    };
    let data: Vec<Vec<C<T>>> = batch.par_iter().map(|r| rotated_der_log(machine, r)).collect::<Result<_>>()?;
    let mut grad = vec![czero::<T>(); n_par];
    for (o, &w) in data.iter().zip(&bw) {
        for (g, ok) in grad.iter_mut().zip(o) {
            *g -= ok.conj() * w;
        }
    }
    let mw = sample_weights(model)?;
    let ders: Vec<Vec<C<T>>> = model.configs.par_iter().map(|s| machine.der_log(s)).collect();
    for (o, &w) in ders.iter().zip(&mw) {
        for (g, ok) in grad.iter_mut().zip(o) {
            *g += ok.conj() * w;
        }
    }
    Ok(grad)
}

/// `|<ref|Ψ>|² / (<ref|ref><Ψ|Ψ>)` by dense summation.
pub fn fidelity<T: Real, M: Machine<T> + ?Sized>(machine: &M, index: &HilbertIndex<T>, reference: &[C<T>]) -> Result<T> {
    if reference.len() != index.n_states() {
        return Err(Error::DimensionMismatch { expected: index.n_states(), found: reference.len() });
    }
    let logs: Vec<C<T>> = index.states().map(|s| machine.try_log_val(&s)).collect::<Result<_>>()?;
    let shift = logs.iter().map(|l| l.re).fold(T::neg_infinity(), T::max);
    let psi: Vec<C<T>> = logs.iter().map(|l| (l - shift).exp()).collect();
    Ok(dot(reference, &psi).norm_sqr() / (norm_sqr(reference) * norm_sqr(&psi)))
}

/// Applies `U_b` to a dense spin-1/2 state vector.
pub fn rotate_state<T: Real>(index: &HilbertIndex<T>, psi: &[C<T>], basis: &[Basis]) -> Result<Vec<C<T>>> {
    let space = index.space();
    if !space.is_spin_half() || space.is_constrained() {
        return Err(Error::invalid("basis rotations need an unconstrained spin-1/2 space"));
    }
    if basis.len() != space.n_sites() || psi.len() != index.n_states() {
        return Err(Error::DimensionMismatch { expected: space.n_sites(), found: basis.len() });
    }
    let states: Vec<Vec<T>> = index.states().collect();
    let mut cur = psi.to_vec();
    for (site, b) in basis.iter().enumerate() {
        if *b == Basis::Z {
            continue;
        }
        let u = b.matrix::<T>();
        let mut next = vec![czero::<T>(); cur.len()];
        for (i, s) in states.iter().enumerate() {
            let row = outcome_index(s[site])?;
            let mut flipped = s.clone();
            flipped[site] = -s[site];
            let j = index.state_to_number(&flipped)?;
            next[i] = u[(row, row)] * cur[i] + u[(row, 1 - row)] * cur[j];
        }
        cur = next;
    }
    Ok(cur)
}

/// Draws `n_records` records from the dense state `psi`; record `k` is
/// measured in `bases[k % bases.len()]`.
pub fn generate_measurements<T: Real>(
    index: &HilbertIndex<T>,
    psi: &[C<T>],
    bases: &[Vec<Basis>],
    n_records: usize,
    seed: u64,
) -> Result<Vec<MeasurementRecord<T>>> {
    if bases.is_empty() {
        return Err(Error::invalid("no measurement bases given"));
    }
    let dists = bases
        .iter()
        .map(|b| {
            let rotated = rotate_state(index, psi, b)?;
            let probs: Vec<f64> = rotated.iter().map(|z| z.norm_sqr().as_f64()).collect();
            WeightedIndex::new(&probs).map_err(|e| Error::invalid(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_records)
        .map(|k| {
            let j = k % bases.len();
            let state = index.number_to_state(dists[j].sample(&mut rng))?;
            MeasurementRecord::new(bases[j].clone(), state)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsrConfig {
    pub n_iter: usize,
    pub batch_size: usize,
    /// Model samples per iteration when a sampler is used.
    #[serde(default = "default_model_samples")]
    pub n_samples: usize,
}

fn default_model_samples() -> usize {
    1000
}

impl QsrConfig {
    pub fn validate(&self, n_records: usize) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > n_records {
            return Err(Error::invalid(format!(
                "batch_size must be in 1..={n_records}, got {}",
                self.batch_size
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QsrRecord<T> {
    pub iteration: usize,
    /// NLL over the whole dataset with exact normalization, when available.
    pub nll: Option<T>,
    pub fidelity: Option<T>,
    pub acceptance: Option<Vec<f64>>,
}

impl<T: Real> QsrRecord<T> {
    pub fn to_json(&self) -> serde_json::Value {
        let mut rec = json!({ "Iteration": self.iteration });
        if let Some(v) = self.nll {
            rec["Nll"] = json!({ "Mean": v.as_f64() });
        }
        if let Some(v) = self.fidelity {
            rec["Fidelity"] = json!({ "Mean": v.as_f64() });
        }
        if let Some(a) = &self.acceptance {
            rec["Acceptance"] = json!(a);
        }
        rec
    }
}

/// Trains `machine` on `records`. Mini-batches are drawn uniformly with
/// replacement (ChaCha8 seeded with `seed`). The model term comes from
/// `sampler` when given, else from exact enumeration of `index`. With
/// `index`, the log carries the exact NLL, and with `reference` also the
/// fidelity.
#[allow(clippy::too_many_arguments)]
pub fn run_qsr<T: Real, M: Machine<T> + ?Sized>(
    config: &QsrConfig,
    machine: &mut M,
    optimizer: &mut Optimizer<T>,
    records: &[MeasurementRecord<T>],
    mut sampler: Option<&mut Sampler<T>>,
    index: Option<&HilbertIndex<T>>,
    reference: Option<&[C<T>]>,
    seed: u64,
    output_prefix: Option<&Path>,
) -> Result<Vec<QsrRecord<T>>> {
    config.validate(records.len())?;
    for r in records {
        check_record(&*machine, r)?;
    }
    let index = index.filter(|i| i.n_states() <= MAX_EXACT_NORM_STATES);
    if sampler.is_none() && index.is_none() {
        return Err(Error::invalid("run_qsr needs a sampler or an enumerable Hilbert space"));
    }
    if reference.is_some() && index.is_none() {
        return Err(Error::invalid("fidelity needs an enumerable Hilbert space"));
    }
    let distinct = distinct_records(records);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = output_prefix.map(RunLog::create).transpose()?;
    let mut out = Vec::with_capacity(config.n_iter);
    for it in 0..config.n_iter {
        let nll = index
            .map(|i| nll_distinct(&*machine, &distinct, records.len(), Normalization::Exact(i)).map(|n| n.value))
            .transpose()?;
        let fid = match (index, reference) {
            (Some(i), Some(r)) => Some(fidelity(&*machine, i, r)?),
            _ => None,
        };
        let batch: Vec<MeasurementRecord<T>> = (0..config.batch_size)
            .map(|_| records[rng.random_range(0..records.len())].clone())
            .collect();
        let (model, acceptance) = match sampler.as_deref_mut() {
            Some(s) => {
                let m = s.sample(&*machine, config.n_samples)?;
                let acc = m.acceptance.clone();
                (m, Some(acc))
            }
            None => {
                let i = index.expect("checked above");
                (Samples::enumerate(&*machine, i)?, None)
            }
        };
        let grad = nll_gradient(&*machine, &batch, None, &model)?;
        let mut p = machine.parameters();
        optimizer
            .update_complex(&mut p, &grad)
            .map_err(|e| Error::NonFinite(format!("iteration {it}: {e}")))?;
        machine.set_parameters(&p)?;
        let rec = QsrRecord { iteration: it, nll, fidelity: fid, acceptance };
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
