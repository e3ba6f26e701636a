use nqs_core::hilbert::HilbertSpace;
use nqs_core::io::config::{parse_config, RunConfig};
use nqs_core::lattice::Graph;
use nqs_core::machine::{Machine, RbmSpin};
use nqs_core::operator::{heisenberg, ising};
use nqs_core::supervised::{overlap_loss, SupervisedDataset};
use nqs_core::tomography::{rotate_state, Basis};
use nqs_core::C;
use proptest::prelude::*;

fn rbm(n: usize, m: usize, seed: u64, sigma: f64) -> RbmSpin<f64> {
    let mut r = RbmSpin::new(n, m);
    r.init_random_parameters(seed, sigma).unwrap();
    r
}

fn basis() -> impl Strategy<Value = Basis> {
    prop_oneof![Just(Basis::X), Just(Basis::Y), Just(Basis::Z)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlap_lies_in_unit_interval(n in 2usize..=10, seed in 0u64..1000, sigma in 0.01f64..1.0) {
        let h = HilbertSpace::<f64>::spin_sites(0.5, n, None).unwrap();
        let index = h.index().unwrap();
        let target = rbm(n, 2, seed + 1, sigma);
        let psi: Vec<C<f64>> = index.states().map(|s| target.log_val(&s).exp()).collect();
        let data = SupervisedDataset::from_amplitudes(&index, &psi).unwrap();
        let o = overlap_loss(&rbm(n, n, seed, sigma), &data).unwrap();
        prop_assert!(!o.orthogonal);
        prop_assert!(o.loss >= -1e-12);
        let f = (-o.loss).exp();
        prop_assert!(f > 0.0 && f <= 1.0 + 1e-12, "{}", f);
        prop_assert!((f - o.overlap).abs() < 1e-12);
    }

    #[test]
    fn state_numbering_is_a_bijection(n in 1usize..=8, two_s in 1usize..=3, constrained: bool) {
        let s = two_s as f64 / 2.0;
        let sz = if constrained && (two_s * n) % 2 == 0 { Some(0.0) } else { None };
        let h = HilbertSpace::<f64>::spin_sites(s, n, sz).unwrap();
        let index = h.index().unwrap();
        for (i, state) in index.states().enumerate() {
            prop_assert!(h.is_valid(&state));
            prop_assert_eq!(index.state_to_number(&state).unwrap(), i);
        }
        prop_assert_eq!(index.n_states() as u128, h.n_states());
    }

    #[test]
    fn model_hamiltonians_are_hermitian(n in 2usize..=6, field in -2.0f64..2.0, pbc: bool) {
        let g = Graph::hypercube(n, 1, pbc).unwrap();
        let h = HilbertSpace::<f64>::spin(0.5, &g, None).unwrap();
        let index = h.index().unwrap();
        for op in [ising(&h, &g, field).unwrap(), heisenberg(&h, &g).unwrap()] {
            let m = op.to_dense(&index).unwrap();
            let d = index.n_states();
            for a in 0..d {
                for b in 0..d {
                    prop_assert!((m[(a, b)] - m[(b, a)].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rotations_preserve_the_norm(bases in prop::collection::vec(basis(), 1..=5), seed in 0u64..1000) {
        let n = bases.len();
        let h = HilbertSpace::<f64>::spin_sites(0.5, n, None).unwrap();
        let index = h.index().unwrap();
        let m = rbm(n, 2, seed, 0.5);
        let psi: Vec<C<f64>> = index.states().map(|s| m.log_val(&s).exp()).collect();
        let rotated = rotate_state(&index, &psi, &bases).unwrap();
        let norm = |v: &[C<f64>]| v.iter().map(|a| a.norm_sqr()).sum::<f64>();
        prop_assert!((norm(&rotated) / norm(&psi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_val_diff_matches_direct_evaluation(n in 2usize..=10, seed in 0u64..1000, flips in prop::collection::vec(0usize..10, 1..=3)) {
        let m = rbm(n, 3, seed, 0.3);
        let h = HilbertSpace::<f64>::spin_sites(0.5, n, None).unwrap();
        let v = h.index().unwrap().number_to_state(seed as usize % (1 << n)).unwrap();
        let mut changes: Vec<(usize, f64)> = flips.iter().map(|&i| (i % n, -v[i % n])).collect();
        changes.sort_by_key(|c| c.0);
        changes.dedup_by_key(|c| c.0);
        let mut w = v.clone();
        for &(i, x) in &changes {
            w[i] = x;
        }
        let diff = m.log_val_diff(&v, &changes, &m.lookup(&v));
        let direct = m.log_val(&w) - m.log_val(&v);
        prop_assert!((diff - direct).norm() < 1e-10);
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), length in 2usize..=40, h in -3.0f64..3.0, n_iter in 0usize..500, lr in 1e-4f64..1.0) {
        let text = format!(r#"{{
            "seed": {seed},
            "graph": {{"kind": "hypercube", "length": {length}}},
            "hilbert": {{"kind": "spin"}},
            "operator": {{"kind": "ising", "h": {h}}},
            "machine": {{"kind": "rbm_spin", "alpha": 2}},
            "sampler": {{"kind": "local", "n_chains": 3}},
            "optimizer": {{"kind": "Sgd", "learning_rate": {lr}}},
            "driver": {{"kind": "vmc", "n_samples": 100, "n_iter": {n_iter}}}
        }}"#);
        let cfg: RunConfig = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_json().to_string()).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
