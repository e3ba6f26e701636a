//! Finite many-body bases `H = ⊗ H_local` with an optional fixed total of
//! the local quantum numbers, and the integer indexing of basis states.
//!
//! Configurations are plain slices of local values. Spin-`s` sites take the
//! values `{-2s, -2s+2, ..., 2s}` (so spin-1/2 is `{-1, +1}`), boson sites
//! take `{0, 1, ..., n_max}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::Graph;
use crate::scalar::Real;

/// Largest constrained space for which an explicit enumeration table is built.
pub const MAX_INDEXED_STATES: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalKind {
    /// Spin with `2s` stored as an integer.
    Spin { two_s: usize },
    Boson { n_max: usize },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HilbertSpace<T> {
    n_sites: usize,
    local_values: Vec<T>,
    kind: LocalKind,
    /// Required sum of local *indices* over all sites.
    index_sum: Option<usize>,
}

impl<T: Real> HilbertSpace<T> {
    /// Unconstrained space with arbitrary strictly increasing local values.
    pub fn new(local_values: Vec<T>, n_sites: usize) -> Result<Self> {
        if local_values.len() < 2 {
            return Err(Error::invalid("local space needs at least two values"));
        }
        if local_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("local values must be strictly increasing"));
        }
        if n_sites == 0 {
            return Err(Error::invalid("n_sites must be positive"));
        }
        Ok(HilbertSpace {
            n_sites,
            local_values,
            kind: LocalKind::Custom,
            index_sum: None,
        })
    }

    /// Spin-`s` space on the sites of `graph`, optionally restricted to a
    /// fixed total magnetization `total_sz`.
    pub fn spin(s: f64, graph: &Graph, total_sz: Option<f64>) -> Result<Self> {
        Self::spin_sites(s, graph.n_sites(), total_sz)
    }

    pub fn spin_sites(s: f64, n_sites: usize, total_sz: Option<f64>) -> Result<Self> {
        let two_s = (2.0 * s).round();
        if !(two_s >= 1.0 && (2.0 * s - two_s).abs() < 1e-12) {
            return Err(Error::invalid(format!("spin s={s} is not a positive half-integer")));
        }
        let two_s = two_s as usize;
        let local_values = (0..=two_s)
            .map(|k| T::of(2.0 * k as f64 - two_s as f64))
            .collect();
        let mut space = Self::new(local_values, n_sites)?;
        space.kind = LocalKind::Spin { two_s };
        if let Some(sz) = total_sz {
            // sum of indices k_i with sigma_i = 2 k_i - 2s  =>  sum k = sz + s N
            let target = sz + s * n_sites as f64;
            let rounded = target.round();
            if (target - rounded).abs() > 1e-9
                || rounded < 0.0
                || rounded > (two_s * n_sites) as f64
            {
                return Err(Error::invalid(format!(
                    "total_sz={sz} is not reachable with {n_sites} spin-{s} sites"
                )));
            }
            space.index_sum = Some(rounded as usize);
        }
        Ok(space)
    }

    /// Bosonic space with at most `n_max` particles per site, optionally at
    /// fixed total particle number.
    pub fn boson(n_max: usize, graph: &Graph, n_particles: Option<usize>) -> Result<Self> {
        Self::boson_sites(n_max, graph.n_sites(), n_particles)
    }

    pub fn boson_sites(n_max: usize, n_sites: usize, n_particles: Option<usize>) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::invalid("n_max must be positive"));
        }
        let local_values = (0..=n_max).map(|k| T::of_usize(k)).collect();
        let mut space = Self::new(local_values, n_sites)?;
        space.kind = LocalKind::Boson { n_max };
        if let Some(n) = n_particles {
            if n > n_max * n_sites {
                return Err(Error::invalid(format!(
                    "{n} particles do not fit on {n_sites} sites with n_max={n_max}"
                )));
            }
            space.index_sum = Some(n);
        }
        Ok(space)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_values(&self) -> &[T] {
        &self.local_values
    }

    pub fn local_size(&self) -> usize {
        self.local_values.len()
    }

    pub fn kind(&self) -> LocalKind {
        self.kind
    }

    pub fn is_spin_half(&self) -> bool {
        self.kind == LocalKind::Spin { two_s: 1 }
    }

    pub fn is_constrained(&self) -> bool {
        self.index_sum.is_some()
    }

    /// Required sum of local indices, when constrained.
    pub fn index_sum(&self) -> Option<usize> {
        self.index_sum
    }

    /// Position of `value` in the local basis.
    pub fn local_index(&self, value: T) -> Option<usize> {
        self.local_values.iter().position(|&v| v == value)
    }

    pub fn to_indices(&self, config: &[T]) -> Result<Vec<usize>> {
        if config.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: config.len(),
            });
        }
        config
            .iter()
            .map(|&v| {
                self.local_index(v)
                    .ok_or_else(|| Error::InvalidConfiguration(format!("value {v} not in local basis")))
            })
            .collect()
    }

    pub fn from_indices(&self, indices: &[usize]) -> Vec<T> {
        indices.iter().map(|&k| self.local_values[k]).collect()
    }

    /// Whether every value lies in the local basis (ignores the constraint).
    pub fn is_in_basis(&self, config: &[T]) -> bool {
        config.len() == self.n_sites && config.iter().all(|&v| self.local_index(v).is_some())
    }

    pub fn satisfies_constraint(&self, config: &[T]) -> bool {
        match self.index_sum {
            None => true,
            Some(target) => {
                let sum: Option<usize> = config
                    .iter()
                    .map(|&v| self.local_index(v))
                    .sum();
                sum == Some(target)
            }
        }
    }

    pub fn is_valid(&self, config: &[T]) -> bool {
        self.is_in_basis(config) && self.satisfies_constraint(config)
    }

    /// Number of constraint-satisfying configurations (exact, no enumeration).
    pub fn n_states(&self) -> u128 {
        let d = self.local_size();
        match self.index_sum {
            None => (d as u128).checked_pow(self.n_sites as u32).unwrap_or(u128::MAX),
            Some(target) => count_with_sum(self.n_sites, d, target),
        }
    }

    /// Uniformly random local values, then projected onto the constraint by a
    /// shuffled greedy fill when one is present.
    pub fn random_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let d = self.local_size();
        match self.index_sum {
            None => (0..self.n_sites)
                .map(|_| self.local_values[rng.random_range(0..d)])
                .collect(),
            Some(target) => {
                let mut remaining = target;
                let mut idx = vec![0usize; self.n_sites];
                for k in idx.iter_mut() {
                    let take = remaining.min(d - 1);
                    *k = take;
                    remaining -= take;
                }
                for i in (1..idx.len()).rev() {
                    let j = rng.random_range(0..=i);
                    idx.swap(i, j);
                }
                self.from_indices(&idx)
            }
        }
    }

    /// Builds the integer indexing of the space.
    pub fn index(&self) -> Result<HilbertIndex<T>> {
        HilbertIndex::new(self)
    }
}

fn count_with_sum(n_sites: usize, d: usize, target: usize) -> u128 {
    let mut ways = vec![0u128; target + 1];
    ways[0] = 1;
    for _ in 0..n_sites {
        let mut next = vec![0u128; target + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..d {
                if s + k <= target {
                    next[s + k] = next[s + k].saturating_add(w);
                }
            }
        }
        ways = next;
    }
    ways[target]
}

/// Bijection between `[0, n_states)` and the constraint-satisfying
/// configurations, in lexicographic order with site 0 most significant and
/// local values ascending.
#[derive(Clone, Debug)]
pub struct HilbertIndex<T> {
    space: HilbertSpace<T>,
    n_states: usize,
    /// Sorted mixed-radix codes of the allowed states (constrained spaces only).
    table: Option<Vec<u64>>,
}

impl<T: Real> HilbertIndex<T> {
    pub fn new(space: &HilbertSpace<T>) -> Result<Self> {
        let d = space.local_size() as u128;
        let full = d.checked_pow(space.n_sites as u32);
        if full.is_none_or(|f| f > u64::MAX as u128) {
            return Err(Error::SpaceTooLarge {
                n_states: space.n_states(),
                limit: u64::MAX as u128,
            });
        }
        let table = match space.index_sum {
            None => None,
            Some(target) => {
                let count = space.n_states();
                if count > MAX_INDEXED_STATES {
                    return Err(Error::SpaceTooLarge {
                        n_states: count,
                        limit: MAX_INDEXED_STATES,
                    });
                }
                let mut out = Vec::with_capacity(count as usize);
                enumerate_with_sum(space.n_sites, space.local_size(), target, 0, &mut out);
                Some(out)
            }
        };
        let n_states = match &table {
            Some(t) => t.len(),
            None => usize::try_from(full.unwrap()).map_err(|_| Error::SpaceTooLarge {
                n_states: full.unwrap(),
                limit: usize::MAX as u128,
            })?,
        };
        Ok(HilbertIndex {
            space: space.clone(),
            n_states,
            table,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn space(&self) -> &HilbertSpace<T> {
        &self.space
    }

    fn code_of_indices(&self, idx: &[usize]) -> u64 {
        let d = self.space.local_size() as u64;
        idx.iter().fold(0u64, |acc, &k| acc * d + k as u64)
    }

    fn indices_of_code(&self, mut code: u64) -> Vec<usize> {
        let d = self.space.local_size() as u64;
        let n = self.space.n_sites;
        let mut idx = vec![0usize; n];
        for slot in idx.iter_mut().rev() {
            *slot = (code % d) as usize;
            code /= d;
        }
        idx
    }

    /// Local indices of state `i`.
    pub fn number_to_indices(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.n_states {
            return Err(Error::invalid(format!(
                "state number {i} out of range [0, {})",
                self.n_states
            )));
        }
        let code = match &self.table {
            Some(t) => t[i],
            None => i as u64,
        };
        Ok(self.indices_of_code(code))
    }

    pub fn number_to_state(&self, i: usize) -> Result<Vec<T>> {
        Ok(self.space.from_indices(&self.number_to_indices(i)?))
    }

    pub fn indices_to_number(&self, idx: &[usize]) -> Option<usize> {
        let code = self.code_of_indices(idx);
        match &self.table {
            Some(t) => t.binary_search(&code).ok(),
            None => Some(code as usize),
        }
    }

    pub fn state_to_number(&self, config: &[T]) -> Result<usize> {
        let idx = self.space.to_indices(config)?;
        self.indices_to_number(&idx).ok_or_else(|| {
            Error::InvalidConfiguration(format!("{config:?} violates the space constraint"))
        })
    }

    /// All states in index order.
    pub fn states(&self) -> impl Iterator<Item = Vec<T>> + '_ {
        (0..self.n_states).map(move |i| self.number_to_state(i).expect("in range"))
    }
}

fn enumerate_with_sum(
    sites_left: usize,
    d: usize,
    remaining: usize,
    prefix: u64,
    out: &mut Vec<u64>,
) {
    if sites_left == 0 {
        if remaining == 0 {
            out.push(prefix);
        }
        return;
    }
    let cap = (d - 1) * (sites_left - 1);
    for k in 0..d {
        if k > remaining {
            break;
        }
        if remaining - k > cap {
            continue;
        }
        enumerate_with_sum(
            sites_left - 1,
            d,
            remaining - k,
            prefix * d as u64 + k as u64,
            out,
        );
    }
}
