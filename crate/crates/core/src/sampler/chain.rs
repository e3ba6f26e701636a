use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertIndex, HilbertSpace};
use crate::machine::{LookupTable, Machine};
use crate::scalar::{Real, C};

/// Proposal family of a Metropolis chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    /// One uniformly chosen site takes a uniformly chosen different value.
    Local,
    /// The values on the ends of a uniformly chosen edge are swapped; an edge
    /// with equal values counts as a proposed, rejected move.
    Exchange,
}

/// Metropolis acceptance `min(1, exp(2β Re Δ))` for `Δ = log Ψ(σ') - log Ψ(σ)`.
pub fn accept_probability<T: Real>(re_diff: T, beta: T) -> T {
    let x = T::of(2.0) * beta * re_diff;
    if x >= T::zero() {
        T::one()
    } else {
        x.exp()
    }
}

#[derive(Clone, Debug)]
struct Replica<T> {
    state: Vec<T>,
    log_psi: C<T>,
    lt: LookupTable<T>,
}

/// One Markov chain, or one tempering ensemble of replicas at inverse
/// temperatures `β_r = 1 - r/R`; replica 0 is the physical one.
#[derive(Clone, Debug)]
pub(crate) struct Ensemble<T> {
    replicas: Vec<Replica<T>>,
    betas: Vec<T>,
    rng: ChaCha8Rng,
    swaps: Vec<(u64, u64)>,
}

impl<T: Real> Ensemble<T> {
    pub fn new(hilbert: &HilbertSpace<T>, n_replicas: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = n_replicas.max(1);
        let replicas = (0..r)
            .map(|_| Replica {
                state: hilbert.random_state(&mut rng),
                log_psi: C::new(T::zero(), T::zero()),
                lt: Vec::new(),
            })
            .collect();
        let betas = (0..r)
            .map(|k| T::one() - T::of_usize(k) / T::of_usize(r))
            .collect();
        Ensemble {
            replicas,
            betas,
            rng,
            swaps: vec![(0, 0); r - 1],
        }
    }

    pub fn physical_state(&self) -> &[T] {
        &self.replicas[0].state
    }

    pub fn set_state(&mut self, s: &[T]) {
        for r in self.replicas.iter_mut() {
            r.state = s.to_vec();
        }
    }

    pub fn swap_counts(&self) -> &[(u64, u64)] {
        &self.swaps
    }

    /// Burn-in plus `n_record` recorded sweeps. Returns the recorded physical
    /// configurations and `(accepted, proposed)` per replica for this call.
    #[allow(clippy::too_many_arguments)]
    pub fn run<M: Machine<T> + ?Sized>(
        &mut self,
        machine: &M,
        mv: MoveKind,
        local_values: &[T],
        edges: &[(usize, usize)],
        sweep: usize,
        discard: usize,
        n_record: usize,
    ) -> (Vec<Vec<T>>, Vec<(u64, u64)>) {
        for r in self.replicas.iter_mut() {
            r.log_psi = machine.log_val(&r.state);
            r.lt = machine.lookup(&r.state);
        }
        let mut counts = vec![(0u64, 0u64); self.replicas.len()];
        let mut out = Vec::with_capacity(n_record);
        for s in 0..discard + n_record {
            for k in 0..self.replicas.len() {
                let beta = self.betas[k];
                for _ in 0..sweep {
                    let accepted = step(
                        &mut self.replicas[k],
                        &mut self.rng,
                        machine,
                        mv,
                        local_values,
                        edges,
                        beta,
                    );
                    counts[k].1 += 1;
                    counts[k].0 += accepted as u64;
                }
            }
            self.exchange_replicas();
            if s >= discard {
                out.push(self.replicas[0].state.clone());
            }
        }
        (out, counts)
    }

    /// Sequential swap attempts between neighbours `(r, r+1)`.
    fn exchange_replicas(&mut self) {
        for r in 0..self.replicas.len().saturating_sub(1) {
            let dbeta = self.betas[r] - self.betas[r + 1];
            let dlog = self.replicas[r + 1].log_psi.re - self.replicas[r].log_psi.re;
            let p = accept_probability(dlog, dbeta);
            let u: f64 = self.rng.random();
            self.swaps[r].1 += 1;
            if T::of(u) < p {
                self.replicas.swap(r, r + 1);
                self.swaps[r].0 += 1;
            }
        }
    }
}

fn step<T: Real, M: Machine<T> + ?Sized>(
    rep: &mut Replica<T>,
    rng: &mut ChaCha8Rng,
    machine: &M,
    mv: MoveKind,
    local_values: &[T],
    edges: &[(usize, usize)],
    beta: T,
) -> bool {
    let mut changes = [(0usize, T::zero()); 2];
    let n_changes = match mv {
        MoveKind::Local => {
            let n = rep.state.len();
            let d = local_values.len();
            let i = rng.random_range(0..n);
            let cur = local_values
                .iter()
                .position(|&x| x == rep.state[i])
                .expect("state in local basis");
            let mut k = rng.random_range(0..d - 1);
            if k >= cur {
                k += 1;
            }
            changes[0] = (i, local_values[k]);
            1
        }
        MoveKind::Exchange => {
            let (i, j) = edges[rng.random_range(0..edges.len())];
            if rep.state[i] == rep.state[j] {
                return false;
            }
            changes[0] = (i, rep.state[j]);
            changes[1] = (j, rep.state[i]);
            2
        }
    };
    let changes = &changes[..n_changes];
    let diff = machine.log_val_diff(&rep.state, changes, &rep.lt);
    let p = accept_probability(diff.re, beta);
    let u: f64 = rng.random();
    if T::of(u) < p {
        machine.update_lookup(&rep.state, changes, &mut rep.lt);
        for &(i, x) in changes {
            rep.state[i] = x;
        }
        rep.log_psi += diff;
        true
    } else {
        false
    }
}

/// Exact one-step transition matrix `T[σ][σ']` of the Metropolis chain at
/// inverse temperature `beta`, assembled by enumerating every proposal.
pub fn transition_matrix<T: Real, M: Machine<T> + ?Sized>(
    mv: MoveKind,
    machine: &M,
    index: &HilbertIndex<T>,
    edges: &[(usize, usize)],
    beta: T,
) -> Result<Vec<Vec<T>>> {
    let hilbert = index.space();
    let n = hilbert.n_sites();
    let dim = index.n_states();
    let values = hilbert.local_values();
    let d = values.len();
    let mut t = vec![vec![T::zero(); dim]; dim];
    let logs: Vec<C<T>> = index.states().map(|s| machine.log_val(&s)).collect();
    for (a, state) in index.states().enumerate() {
        let mut targets: Vec<(Vec<T>, T)> = Vec::new();
        match mv {
            MoveKind::Local => {
                if hilbert.is_constrained() {
                    return Err(Error::invalid("local moves on a constrained space"));
                }
                let q = T::one() / T::of_usize(n * (d - 1));
                for i in 0..n {
                    for &x in values.iter().filter(|&&x| x != state[i]) {
                        let mut next = state.clone();
                        next[i] = x;
                        targets.push((next, q));
                    }
                }
            }
            MoveKind::Exchange => {
                if edges.is_empty() {
                    return Err(Error::invalid("exchange moves need edges"));
                }
                let q = T::one() / T::of_usize(edges.len());
                for &(i, j) in edges {
                    if state[i] != state[j] {
                        let mut next = state.clone();
                        next.swap(i, j);
                        targets.push((next, q));
                    }
                }
            }
        }
        let mut off = T::zero();
        for (next, q) in targets {
            let b = index.state_to_number(&next)?;
            let p = q * accept_probability((logs[b] - logs[a]).re, beta);
            t[a][b] += p;
            off += p;
        }
        t[a][a] += T::one() - off;
    }
    Ok(t)
}
