//! Site/edge graphs with integer edge colors, plus translation groups for
//! periodic hypercubes.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// An undirected bond `(i, j, color)` stored with `i < j`.
pub type Edge = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypercubeInfo {
    pub length: usize,
    pub n_dim: usize,
    pub pbc: bool,
}

/// Finite edge-colored graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n_sites: usize,
    edges: Vec<Edge>,
    hypercube: Option<HypercubeInfo>,
}

impl Graph {
    /// Hypercubic lattice of side `length` in `n_dim` dimensions.
    ///
    /// Sites are numbered with the first coordinate running fastest. Wrap
    /// bonds that coincide with an open bond (`length == 2`) or with the site
    /// itself (`length == 1`) are dropped.
    pub fn hypercube(length: usize, n_dim: usize, pbc: bool) -> Result<Self> {
        if length < 1 {
            return Err(Error::invalid("hypercube length must be at least 1"));
        }
        if !(1..=3).contains(&n_dim) {
            return Err(Error::invalid(format!(
                "hypercube n_dim must be in 1..=3, got {n_dim}"
            )));
        }
        let n_sites = length.pow(n_dim as u32);
        let mut set = BTreeSet::new();
        for site in 0..n_sites {
            let coords = site_coords(site, length, n_dim);
            for d in 0..n_dim {
                let next = coords[d] + 1;
                let target = if next < length {
                    next
                } else if pbc {
                    0
                } else {
                    continue;
                };
                let mut nc = coords.clone();
                nc[d] = target;
                let other = site_index(&nc, length);
                if other != site {
                    set.insert((site.min(other), site.max(other), 0));
                }
            }
        }
        Ok(Graph {
            n_sites,
            edges: set.into_iter().collect(),
            hypercube: Some(HypercubeInfo {
                length,
                n_dim,
                pbc,
            }),
        })
    }

    /// Graph defined by an explicit colored edge list.
    pub fn custom(edges: &[Edge]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::invalid("custom graph needs at least one edge"));
        }
        let mut set = BTreeSet::new();
        let mut n_sites = 0;
        for &(i, j, c) in edges {
            if i == j {
                return Err(Error::invalid(format!("self-loop on site {i}")));
            }
            let e = (i.min(j), i.max(j), c);
            if !set.insert(e) {
                return Err(Error::invalid(format!(
                    "duplicate edge ({}, {}) with color {c}",
                    e.0, e.1
                )));
            }
            n_sites = n_sites.max(i.max(j) + 1);
        }
        Ok(Graph {
            n_sites,
            edges: set.into_iter().collect(),
            hypercube: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn hypercube_info(&self) -> Option<&HypercubeInfo> {
        self.hypercube.as_ref()
    }

    /// Distinct edge colors in ascending order.
    pub fn colors(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.edges.iter().map(|e| e.2).collect();
        set.into_iter().collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_sites];
        for &(i, j, _) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// BFS two-coloring; `None` if the graph has an odd cycle.
    pub fn two_coloring(&self) -> Option<Vec<u8>> {
        let adj = self.adjacency();
        let mut color = vec![u8::MAX; self.n_sites];
        let mut queue = VecDeque::new();
        for start in 0..self.n_sites {
            if color[start] != u8::MAX {
                continue;
            }
            color[start] = 0;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if color[v] == u8::MAX {
                        color[v] = 1 - color[u];
                        queue.push_back(v);
                    } else if color[v] == color[u] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_some()
    }

    /// Whether `(i, j, color)` is a bond, in either orientation.
    pub fn has_edge(&self, i: usize, j: usize, color: usize) -> bool {
        self.edges
            .binary_search(&(i.min(j), i.max(j), color))
            .is_ok()
    }

    /// Group of all lattice translations of a periodic hypercube.
    pub fn translation_group(&self) -> Result<SymmetryGroup> {
        let info = match &self.hypercube {
            Some(info) if info.pbc => info,
            _ => {
                return Err(Error::invalid(
                    "translation group requires a periodic hypercube",
                ))
            }
        };
        let (l, d) = (info.length, info.n_dim);
        let perms = (0..self.n_sites)
            .map(|shift| {
                let t = site_coords(shift, l, d);
                (0..self.n_sites)
                    .map(|site| {
                        let c: Vec<usize> = site_coords(site, l, d)
                            .iter()
                            .zip(&t)
                            .map(|(x, dx)| (x + dx) % l)
                            .collect();
                        site_index(&c, l)
                    })
                    .collect()
            })
            .collect();
        SymmetryGroup::new(perms)
    }
}

fn site_coords(mut site: usize, length: usize, n_dim: usize) -> Vec<usize> {
    let mut c = Vec::with_capacity(n_dim);
    for _ in 0..n_dim {
        c.push(site % length);
        site /= length;
    }
    c
}

fn site_index(coords: &[usize], length: usize) -> usize {
    coords.iter().rev().fold(0, |acc, &x| acc * length + x)
}

/// A set of site permutations closed under composition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryGroup {
    perms: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    /// Validates that every entry is a permutation of the same length and
    /// that the identity is present.
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        let n = perms
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("symmetry group cannot be empty"))?;
        for p in &perms {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.len(),
                });
            }
            let mut seen = vec![false; n];
            for &x in p {
                if x >= n || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::invalid(format!("{p:?} is not a permutation")));
                }
            }
        }
        if !perms.iter().any(|p| p.iter().enumerate().all(|(i, &x)| i == x)) {
            return Err(Error::invalid("symmetry group must contain the identity"));
        }
        Ok(SymmetryGroup { perms })
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn n_sites(&self) -> usize {
        self.perms[0].len()
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.perms
    }

    /// Checks closure under composition.
    pub fn is_closed(&self) -> bool {
        let set: BTreeSet<&Vec<usize>> = self.perms.iter().collect();
        self.perms.iter().all(|p| {
            self.perms.iter().all(|q| {
                let pq: Vec<usize> = q.iter().map(|&i| p[i]).collect();
                set.contains(&pq)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_twenty() {
        let g = Graph::hypercube(20, 1, true).unwrap();
        assert_eq!(g.n_sites(), 20);
        assert_eq!(g.edges().len(), 20);
        for i in 0..20 {
            assert!(g.has_edge(i, (i + 1) % 20, 0));
        }
    }

    #[test]
    fn open_square() {
        let g = Graph::hypercube(2, 2, false).unwrap();
        assert_eq!(g.n_sites(), 4);
        assert_eq!(g.edges().len(), 4);
    }

    #[test]
    fn periodic_square_edge_count() {
        let g = Graph::hypercube(4, 2, true).unwrap();
        assert_eq!(g.n_sites(), 16);
        // every site has 4 distinct neighbours; count unordered pairs by hand
        let mut pairs = BTreeSet::new();
        for x in 0..4 {
            for y in 0..4 {
                let s = x + 4 * y;
                for n in [((x + 1) % 4) + 4 * y, x + 4 * ((y + 1) % 4)] {
                    pairs.insert((s.min(n), s.max(n)));
                }
            }
        }
        assert_eq!(pairs.len(), 32);
        assert_eq!(g.edges().len(), 32);
    }

    #[test]
    fn length_two_wrap_is_deduplicated() {
        let ring = Graph::hypercube(2, 1, true).unwrap();
        assert_eq!(ring.edges(), &[(0, 1, 0)]);
        let sq = Graph::hypercube(2, 2, true).unwrap();
        assert_eq!(sq.edges().len(), 2 * 2);
        let single = Graph::hypercube(1, 1, true).unwrap();
        assert!(single.edges().is_empty());
    }

    #[test]
    fn bad_hypercube_arguments() {
        assert!(Graph::hypercube(0, 1, true).is_err());
        assert!(Graph::hypercube(3, 4, true).is_err());
        assert!(Graph::hypercube(3, 0, false).is_err());
    }

    #[test]
    fn custom_graphs() {
        let g = Graph::custom(&[(0, 1, 0), (1, 2, 0)]).unwrap();
        assert_eq!(g.n_sites(), 3);
        assert_eq!(g.edges().len(), 2);

        let tri = Graph::custom(&[(0, 1, 0), (1, 2, 1), (2, 0, 1)]).unwrap();
        assert_eq!(tri.edges(), &[(0, 1, 0), (0, 2, 1), (1, 2, 1)]);
        assert_eq!(tri.colors(), vec![0, 1]);

        let flipped = Graph::custom(&[(1, 0, 0)]).unwrap();
        assert_eq!(flipped.edges(), &[(0, 1, 0)]);

        assert!(Graph::custom(&[(2, 2, 0)]).is_err());
        assert!(Graph::custom(&[(0, 1, 0), (1, 0, 0)]).is_err());
        assert!(Graph::custom(&[]).is_err());
        // same pair with a different color is a distinct bond
        assert!(Graph::custom(&[(0, 1, 0), (1, 0, 1)]).is_ok());
    }

    #[test]
    fn bipartiteness() {
        assert!(Graph::hypercube(20, 1, true).unwrap().is_bipartite());
        assert!(!Graph::custom(&[(0, 1, 0), (1, 2, 0), (2, 0, 0)])
            .unwrap()
            .is_bipartite());
        assert!(Graph::hypercube(4, 2, true).unwrap().is_bipartite());
        assert!(!Graph::hypercube(3, 1, true).unwrap().is_bipartite());
    }

    fn brute_force_bipartite(g: &Graph) -> bool {
        let n = g.n_sites();
        (0u32..(1 << n)).any(|mask| {
            g.edges()
                .iter()
                .all(|&(i, j, _)| ((mask >> i) & 1) != ((mask >> j) & 1))
        })
    }

    #[test]
    fn bipartite_agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.random_range(2..=10);
            let mut edges = BTreeSet::new();
            let m = rng.random_range(1..=2 * n);
            for _ in 0..m {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j {
                    edges.insert((i.min(j), i.max(j), 0));
                }
            }
            if edges.is_empty() {
                continue;
            }
            let edges: Vec<Edge> = edges.into_iter().collect();
            let g = Graph::custom(&edges).unwrap();
            assert_eq!(g.is_bipartite(), brute_force_bipartite(&g), "{edges:?}");
        }
    }

    #[test]
    fn ring_translations() {
        let g = Graph::hypercube(4, 1, true).unwrap();
        let t = g.translation_group().unwrap();
        assert_eq!(t.order(), 4);
        assert!(t.permutations().contains(&vec![0, 1, 2, 3]));
        assert!(t.is_closed());
        assert_eq!(
            Graph::hypercube(20, 1, true)
                .unwrap()
                .translation_group()
                .unwrap()
                .order(),
            20
        );
    }

    #[test]
    fn square_translations_preserve_edges() {
        let g = Graph::hypercube(3, 2, true).unwrap();
        let t = g.translation_group().unwrap();
        assert_eq!(t.order(), 9);
        assert!(t.is_closed());
        for p in t.permutations() {
            for &(i, j, c) in g.edges() {
                assert!(g.has_edge(p[i], p[j], c));
            }
        }
    }

    #[test]
    fn translation_group_rejections() {
        assert!(Graph::hypercube(4, 1, false)
            .unwrap()
            .translation_group()
            .is_err());
        assert!(Graph::custom(&[(0, 1, 0)])
            .unwrap()
            .translation_group()
            .is_err());
    }

    #[test]
    fn symmetry_group_validation() {
        assert!(SymmetryGroup::new(vec![]).is_err());
        assert!(SymmetryGroup::new(vec![vec![1, 0]]).is_err());
        assert!(SymmetryGroup::new(vec![vec![0, 0]]).is_err());
        let inv = SymmetryGroup::new(vec![vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
        assert!(inv.is_closed());
    }
}
