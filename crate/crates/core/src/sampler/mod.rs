//! Markov-chain samplers targeting `π(σ) ∝ |Ψ(σ)|²`, and exact sampling for
//! small spaces.
//!
//! A sweep is `sweep_size` proposed moves (default: the number of sites) and
//! one configuration is recorded per sweep. Chain `c` draws from a ChaCha8
//! stream seeded by [`chain_seed`]`(seed, c)`, so batches are identical for a
//! given seed whatever the number of worker threads.

mod chain;
mod exact;

pub use chain::{accept_probability, transition_matrix, MoveKind};
pub use exact::{exact_distribution, exact_sample, MAX_EXACT_STATES};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertIndex, HilbertSpace};
use crate::lattice::Graph;
use crate::machine::Machine;
use crate::scalar::Real;

use chain::Ensemble;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Local,
    Exchange,
    LocalPt,
    ExchangePt,
    Exact,
}

impl SamplerKind {
    pub fn move_kind(self) -> Option<MoveKind> {
        match self {
            SamplerKind::Local | SamplerKind::LocalPt => Some(MoveKind::Local),
            SamplerKind::Exchange | SamplerKind::ExchangePt => Some(MoveKind::Exchange),
            SamplerKind::Exact => None,
        }
    }

    pub fn is_tempered(self) -> bool {
        matches!(self, SamplerKind::LocalPt | SamplerKind::ExchangePt)
    }
}

fn default_chains() -> usize {
    8
}
fn default_discard() -> usize {
    10
}
fn default_replicas() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    /// Burn-in sweeps before each batch.
    #[serde(default = "default_discard")]
    pub n_discard: usize,
    /// Moves per sweep; `None` means the number of sites.
    #[serde(default)]
    pub sweep_size: Option<usize>,
    /// Temperatures per tempering ensemble (tempered kinds only).
    #[serde(default = "default_replicas")]
    pub n_replicas: usize,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        SamplerConfig {
            kind,
            n_chains: default_chains(),
            n_discard: default_discard(),
            sweep_size: None,
            n_replicas: default_replicas(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::invalid("sampler n_chains must be positive"));
        }
        if self.sweep_size == Some(0) {
            return Err(Error::invalid("sampler sweep_size must be positive"));
        }
        if self.kind.is_tempered() && self.n_replicas < 2 {
            return Err(Error::invalid("parallel tempering needs n_replicas >= 2"));
        }
        Ok(())
    }
}

/// Configurations from one sampling call.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples<T> {
    /// Chain-major: chain `c` owns `configs[c * per_chain .. (c + 1) * per_chain]`.
    pub configs: Vec<Vec<T>>,
    pub n_chains: usize,
    /// Probability weights summing to 1 for full enumeration; `None` for
    /// equally weighted samples.
    pub weights: Option<Vec<T>>,
    /// Move acceptance per temperature (one entry without tempering).
    pub acceptance: Vec<f64>,
}

impl<T: Real> Samples<T> {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn per_chain(&self) -> usize {
        self.configs.len() / self.n_chains.max(1)
    }

    /// Every state of `index`, weighted by the exact `π`.
    pub fn enumerate<M: Machine<T> + ?Sized>(machine: &M, index: &HilbertIndex<T>) -> Result<Self> {
        let weights = exact_distribution(machine, index)?;
        Ok(Samples {
            configs: index.states().collect(),
            n_chains: 1,
            weights: Some(weights),
            acceptance: vec![1.0],
        })
    }

    /// Splits per-sample values into per-chain series.
    pub fn by_chain<'a, V: Clone>(&self, values: &'a [V]) -> Vec<&'a [V]> {
        let per = self.per_chain().max(1);
        values.chunks(per).collect()
    }
}

/// Seed of chain `c`: a SplitMix64 finalizer applied to
/// `seed + (c + 1) * 0x9E3779B97F4A7C15`.
pub fn chain_seed(seed: u64, chain: usize) -> u64 {
    let mut z = seed.wrapping_add((chain as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Persistent sampler: chains keep their state between batches and only
/// refresh cached amplitudes when the machine changes.
#[derive(Clone, Debug)]
pub struct Sampler<T> {
    config: SamplerConfig,
    hilbert: HilbertSpace<T>,
    edges: Vec<(usize, usize)>,
    seed: u64,
    ensembles: Vec<Ensemble<T>>,
    exact_rng: ChaCha8Rng,
    index: Option<HilbertIndex<T>>,
}

impl<T: Real> Sampler<T> {
    pub fn new(config: SamplerConfig, hilbert: &HilbertSpace<T>, graph: Option<&Graph>, seed: u64) -> Result<Self> {
        config.validate()?;
        let edges: Vec<(usize, usize)> = graph
            .map(|g| g.edges().iter().map(|&(i, j, _)| (i, j)).collect())
            .unwrap_or_default();
        if let Some(g) = graph {
            if g.n_sites() != hilbert.n_sites() {
                return Err(Error::DimensionMismatch {
                    expected: hilbert.n_sites(),
                    found: g.n_sites(),
                });
            }
        }
        match config.kind.move_kind() {
            Some(MoveKind::Local) if hilbert.is_constrained() => {
                return Err(Error::invalid(
                    "local moves do not conserve the Hilbert-space constraint; use an exchange sampler",
                ));
            }
            Some(MoveKind::Exchange) if edges.is_empty() => {
                return Err(Error::invalid("exchange moves need a graph with at least one edge"));
            }
            _ => {}
        }
        let index = if config.kind == SamplerKind::Exact {
            let n = hilbert.n_states();
            if n > MAX_EXACT_STATES as u128 {
                return Err(Error::SpaceTooLarge {
                    n_states: n,
                    limit: MAX_EXACT_STATES as u128,
                });
            }
            Some(hilbert.index()?)
        } else {
            None
        };
        let replicas = if config.kind.is_tempered() { config.n_replicas } else { 1 };
        let ensembles = (0..config.n_chains)
            .map(|c| Ensemble::new(hilbert, replicas, chain_seed(seed, c)))
            .collect();
        Ok(Sampler {
            config,
            hilbert: hilbert.clone(),
            edges,
            seed,
            ensembles,
            exact_rng: ChaCha8Rng::seed_from_u64(chain_seed(seed, usize::MAX)),
            index,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hilbert(&self) -> &HilbertSpace<T> {
        &self.hilbert
    }

    fn sweep_size(&self) -> usize {
        self.config.sweep_size.unwrap_or(self.hilbert.n_sites())
    }

    /// Current physical configuration of each chain.
    pub fn states(&self) -> Vec<Vec<T>> {
        self.ensembles.iter().map(|e| e.physical_state().to_vec()).collect()
    }

    /// Replaces the chain states (every replica of chain `c` gets `states[c]`).
    pub fn set_states(&mut self, states: &[Vec<T>]) -> Result<()> {
        if states.len() != self.ensembles.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ensembles.len(),
                found: states.len(),
            });
        }
        for s in states {
            if !self.hilbert.is_valid(s) {
                return Err(Error::InvalidConfiguration(format!(
                    "initial state {s:?} is not in the Hilbert space or violates its constraint"
                )));
            }
        }
        for (e, s) in self.ensembles.iter_mut().zip(states) {
            e.set_state(s);
        }
        Ok(())
    }

    /// At least `n_samples` configurations, split evenly over the chains.
    pub fn sample<M: Machine<T> + ?Sized>(&mut self, machine: &M, n_samples: usize) -> Result<Samples<T>> {
        if machine.n_visible() != self.hilbert.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert.n_sites(),
                found: machine.n_visible(),
            });
        }
        let n_chains = self.config.n_chains;
        let per_chain = n_samples.div_ceil(n_chains);
        if self.config.kind == SamplerKind::Exact {
            let index = self.index.as_ref().expect("exact sampler has an index");
            let configs = exact_sample(machine, index, per_chain * n_chains, &mut self.exact_rng)?;
            return Ok(Samples {
                configs,
                n_chains,
                weights: None,
                acceptance: vec![1.0],
            });
        }
        let mv = self.config.kind.move_kind().expect("markov kind");
        let sweep = self.sweep_size();
        let discard = self.config.n_discard;
        let edges = &self.edges;
        let d = self.hilbert.local_values().to_vec();
        let runs: Vec<(Vec<Vec<T>>, Vec<(u64, u64)>)> = self
            .ensembles
            .par_iter_mut()
            .map(|e| e.run(machine, mv, &d, edges, sweep, discard, per_chain))
            .collect();
        let replicas = runs.first().map_or(1, |r| r.1.len());
        let mut acc = vec![(0u64, 0u64); replicas];
        let mut configs = Vec::with_capacity(per_chain * n_chains);
        for (c, counts) in runs {
            configs.extend(c);
            for (slot, (a, p)) in acc.iter_mut().zip(counts) {
                slot.0 += a;
                slot.1 += p;
            }
        }
        let acceptance = acc
            .into_iter()
            .map(|(a, p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
            .collect();
        Ok(Samples {
            configs,
            n_chains,
            weights: None,
            acceptance,
        })
    }

    /// Swap acceptance between adjacent temperatures, summed over chains.
    pub fn swap_acceptance(&self) -> Vec<f64> {
        let k = self.ensembles.first().map_or(0, |e| e.swap_counts().len());
        (0..k)
            .map(|r| {
                let (a, p) = self
                    .ensembles
                    .iter()
                    .map(|e| e.swap_counts()[r])
                    .fold((0u64, 0u64), |x, y| (x.0 + y.0, x.1 + y.1));
                if p == 0 { 0.0 } else { a as f64 / p as f64 }
            })
            .collect()
    }
}

/// One-shot sampling with fresh chains.
pub fn run_sampler<T: Real, M: Machine<T> + ?Sized>(
    config: &SamplerConfig,
    machine: &M,
    hilbert: &HilbertSpace<T>,
    graph: Option<&Graph>,
    seed: u64,
    n_samples: usize,
) -> Result<Samples<T>> {
    Sampler::new(config.clone(), hilbert, graph, seed)?.sample(machine, n_samples)
}
