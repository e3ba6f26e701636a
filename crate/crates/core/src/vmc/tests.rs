use super::*;
use crate::exact::full_ed;
use crate::hilbert::{HilbertIndex, HilbertSpace};
use crate::lattice::Graph;
use crate::linalg::hermitian_eigen;
use crate::machine::{Lookup, RbmSpin};
use crate::operator::{heisenberg, ising};
use crate::optimizer::Rule;
use crate::sampler::{SamplerConfig, SamplerKind, Samples};
use crate::scalar::{cplx, creal, dot, C};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ising_chain(n: usize, h: f64, pbc: bool) -> (Graph, Operator<f64>) {
    let g = Graph::hypercube(n, 1, pbc).unwrap();
    let hs = HilbertSpace::spin(0.5, &g, None).unwrap();
    let op = ising(&hs, &g, h).unwrap();
    (g, op)
}

fn random_rbm(n: usize, m: usize, sigma: f64, seed: u64) -> RbmSpin<f64> {
    let mut r = RbmSpin::new(n, m);
    r.init_random_parameters(seed, sigma).unwrap();
    r
}

/// `<Ψ|H|Ψ>/<Ψ|Ψ>` by dense algebra.
fn rayleigh<M: Machine<f64>>(op: &Operator<f64>, m: &M, index: &HilbertIndex<f64>) -> f64 {
    let logs: Vec<Complex64> = index.states().map(|s| m.log_val(&s)).collect();
    let max = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let psi: Vec<Complex64> = logs.iter().map(|l| (l - max).exp()).collect();
    let h = op.to_dense(index).unwrap();
    (dot(&psi, &h.matvec(&psi)) / dot(&psi, &psi)).re
}

fn ground_state_lookup(op: &Operator<f64>) -> (f64, Lookup<f64>, HilbertIndex<f64>) {
    let index = op.hilbert().index().unwrap();
    let r = full_ed(op, true).unwrap();
    let gs = r.eigenvectors.unwrap().swap_remove(0);
    (r.eigenvalues[0], Lookup::from_amplitudes(index.clone(), &gs).unwrap(), index)
}

#[test]
fn zero_operator_gives_zero() {
    let (_, op) = ising_chain(3, 1.0, true);
    let zero = Operator::zero(op.hilbert());
    let m = random_rbm(3, 3, 0.3, 1);
    assert_eq!(local_energy(&zero, &m, &[1.0, -1.0, 1.0]).unwrap(), creal(0.0));
    let samples = Samples::enumerate(&m, &op.hilbert().index().unwrap()).unwrap();
    let f = estimate_gradient(&zero, &m, &samples).unwrap();
    assert!(f.iter().all(|x| x.norm() == 0.0));
}

#[test]
fn uniform_machine_two_site_ising() {
    let (_, op) = ising_chain(2, 1.0, false);
    let m = RbmSpin::<f64>::new(2, 2);
    let e = local_energy(&op, &m, &[1.0, 1.0]).unwrap();
    assert!((e - creal(-3.0)).norm() < 1e-14);
}

#[test]
fn local_energy_reads_connected_elements() {
    let (_, op) = ising_chain(2, 1.0, false);
    let m = random_rbm(2, 3, 0.5, 7);
    let psi = |v: &[f64]| m.log_val(v).exp();
    let want = -1.0 - (psi(&[-1.0, 1.0]) + psi(&[1.0, -1.0])) / psi(&[1.0, 1.0]);
    let got = local_energy(&op, &m, &[1.0, 1.0]).unwrap();
    assert!((got - want).norm() < 1e-12);
}

#[test]
fn eigenstate_has_constant_local_energy() {
    let (_, op) = ising_chain(8, 1.0, true);
    let (e0, lookup, index) = ground_state_lookup(&op);
    for s in index.states() {
        let e = local_energy(&op, &lookup, &s).unwrap();
        assert!((e - creal(e0)).norm() < 1e-9, "{e} vs {e0}");
    }
    let samples = Samples::enumerate(&lookup, &index).unwrap();
    let stats = estimate_energy(&op, &lookup, &samples).unwrap();
    assert!(stats.variance.abs() <= 1e-10);
    assert!((stats.mean - e0).abs() < 1e-10);
    let f = estimate_gradient(&op, &lookup, &samples).unwrap();
    assert!(f.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() <= 1e-8);
}

#[test]
fn zero_amplitude_is_an_error() {
    let (_, op) = ising_chain(2, 1.0, false);
    let index = op.hilbert().index().unwrap();
    let amps = vec![creal(1.0), creal(0.0), creal(1.0), creal(1.0)];
    let m = Lookup::from_amplitudes(index.clone(), &amps).unwrap();
    let bad = index.number_to_state(1).unwrap();
    assert!(matches!(local_energy(&op, &m, &bad), Err(Error::NonFinite(_))));
    // Zero neighbours are fine.
    assert!(local_energy(&op, &m, &index.number_to_state(0).unwrap()).is_ok());
}

#[test]
fn enumeration_matches_rayleigh_quotient() {
    let (_, op) = ising_chain(6, 0.8, true);
    let index = op.hilbert().index().unwrap();
    let m = random_rbm(6, 4, 0.4, 11);
    let samples = Samples::enumerate(&m, &index).unwrap();
    let e = estimate_energy(&op, &m, &samples).unwrap();
    assert!((e.mean - rayleigh(&op, &m, &index)).abs() < 1e-10);
    assert!(e.mean_imag.abs() < 1e-10);
    assert!(e.variance > 0.0);
    assert_eq!((e.sigma, e.taucorr), (0.0, 0.0));
}

#[test]
fn constant_shift_moves_the_mean() {
    let (g, op) = ising_chain(4, 1.0, true);
    let c = 2.75;
    let shifted = op.sum(&Operator::identity(op.hilbert(), creal(c)).unwrap()).unwrap();
    let m = random_rbm(4, 4, 0.3, 5);
    let hs = op.hilbert().clone();
    let cfg = SamplerConfig::new(SamplerKind::Local);
    let samples = crate::sampler::run_sampler(&cfg, &m, &hs, Some(&g), 3, 400).unwrap();
    let a = estimate_energy(&op, &m, &samples).unwrap();
    let b = estimate_energy(&shifted, &m, &samples).unwrap();
    assert!((b.mean - a.mean - c).abs() < 1e-12);
    assert!((b.variance - a.variance).abs() < 1e-10);
}

#[test]
fn gradient_matches_finite_differences() {
    let g = Graph::hypercube(4, 1, true).unwrap();
    let hs = HilbertSpace::spin(0.5, &g, None).unwrap();
    for op in [ising(&hs, &g, 0.7).unwrap(), heisenberg(&hs, &g).unwrap()] {
        let index = hs.index().unwrap();
        let mut m = random_rbm(4, 3, 0.3, 21);
        let f = estimate_gradient(&op, &m, &Samples::enumerate(&m, &index).unwrap()).unwrap();
        let p0 = m.parameters();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..p0.len() {
            let mut d = [0.0; 2];
            for (part, shift) in [cplx(h, 0.0), cplx(0.0, h)].into_iter().enumerate() {
                let mut p = p0.clone();
                p[k] = p0[k] + shift;
                m.set_parameters(&p).unwrap();
                let up = rayleigh(&op, &m, &index);
                p[k] = p0[k] - shift;
                m.set_parameters(&p).unwrap();
                let down = rayleigh(&op, &m, &index);
                d[part] = (up - down) / (2.0 * h);
            }
            m.set_parameters(&p0).unwrap();
            // dE/dRe + i dE/dIm = 2 ∂E/∂α*
            let fd = cplx(d[0], d[1]) * 0.5;
            worst = worst.max((fd - f[k]).norm() / f[k].norm().max(1.0));
        }
        assert!(worst <= 1e-6, "{worst}");
    }
}

fn random_covariance(n: usize, m: usize, seed: u64) -> Covariance<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o: Vec<Vec<C<f64>>> = (0..n)
        .map(|_| (0..m).map(|_| cplx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
        .collect();
    Covariance::new(o, vec![1.0 / n as f64; n]).unwrap()
}

#[test]
fn covariance_is_hermitian_psd() {
    let cov = random_covariance(30, 8, 2);
    let s = cov.matrix();
    assert!(s.hermiticity_defect() < 1e-14);
    let (ev, _) = hermitian_eigen(&s, false).unwrap();
    assert!(ev[0] > -1e-12, "{ev:?}");
    let x: Vec<C<f64>> = (0..8).map(|k| cplx(k as f64, 1.0)).collect();
    let dense = s.matvec(&x);
    let free = cov.apply(&x);
    assert!(dense.iter().zip(&free).all(|(a, b)| (a - b).norm() < 1e-12));
}

#[test]
fn identity_metric_gives_plain_step() {
    // Centered O's with S = I: two samples, O = ±e_k / sqrt(w) arranged per column.
    let m = 3;
    let mut o = Vec::new();
    for k in 0..m {
        for sign in [1.0, -1.0] {
            let mut row = vec![creal(0.0); m];
            row[k] = creal(sign * (m as f64).sqrt());
            o.push(row);
        }
    }
    let n = o.len();
    let cov = Covariance::new(o, vec![1.0 / n as f64; n]).unwrap();
    let s = cov.matrix();
    assert!(s.max_abs_diff(&crate::linalg::DenseMatrix::identity(m)) < 1e-12);
    let f = vec![cplx(0.5, -1.0), cplx(2.0, 0.0), cplx(0.0, 0.3)];
    for solver in [SrSolver::Exact, SrSolver::Iterative] {
        let cfg = SrConfig { diag_shift: 0.0, solver, ..SrConfig::default() };
        let d = sr_solve(&cov, &f, &cfg).unwrap();
        assert!(d.iter().zip(&f).all(|(a, b)| (a - b).norm() < 1e-12));
    }
}

#[test]
fn large_shift_damps() {
    let cov = random_covariance(50, 6, 4);
    let f: Vec<C<f64>> = (0..6).map(|k| cplx(1.0 + k as f64, -0.5)).collect();
    let shift = 1e6;
    let cfg = SrConfig { diag_shift: shift, solver: SrSolver::Exact, ..SrConfig::default() };
    let d = sr_solve(&cov, &f, &cfg).unwrap();
    for (a, b) in d.iter().zip(&f) {
        assert!((a * shift - b).norm() / b.norm() < 1e-5);
    }
}

#[test]
fn exact_and_iterative_solvers_agree() {
    let cov = random_covariance(1000, 460, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let f: Vec<C<f64>> = (0..460).map(|_| cplx(rng.random::<f64>(), rng.random::<f64>())).collect();
    let exact = sr_solve(&cov, &f, &SrConfig { solver: SrSolver::Exact, ..SrConfig::default() }).unwrap();
    let iter = sr_solve(&cov, &f, &SrConfig { solver: SrSolver::Iterative, tol: 1e-13, ..SrConfig::default() })
        .unwrap();
    let diff = exact.iter().zip(&iter).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = exact.iter().map(|a| a.norm()).fold(0.0, f64::max);
    assert!(diff / scale < 1e-8, "{diff} / {scale}");
}

#[test]
fn singular_metric_without_shift_fails() {
    let cov = random_covariance(3, 6, 1);
    let f = vec![creal(1.0); 6];
    let cfg = SrConfig { diag_shift: 0.0, solver: SrSolver::Exact, ..SrConfig::default() };
    let err = sr_solve(&cov, &f, &cfg).unwrap_err().to_string();
    assert!(err.contains("diag_shift"), "{err}");
}

#[test]
fn ising_with_exact_sampler_converges() {
    let (g, op) = ising_chain(8, 1.0, true);
    let e0 = full_ed(&op, false).unwrap().eigenvalues[0];
    let mut m = random_rbm(8, 8, 0.05, 1);
    let mut sampler = Sampler::new(SamplerConfig::new(SamplerKind::Exact), op.hilbert(), Some(&g), 5).unwrap();
    let mut opt = Optimizer::new(Rule::sgd(0.05)).unwrap();
    let cfg = VmcConfig::new(1000, 300);
    let out = run_vmc(&cfg, &op, &mut m, &mut sampler, &mut opt, &[], None).unwrap();
    assert_eq!(out.len(), 300);
    let index = op.hilbert().index().unwrap();
    let e = rayleigh(&op, &m, &index);
    assert!(((e - e0) / e0).abs() < 1e-3, "{e} vs {e0}");
    assert!(out[50].energy.mean < out[0].energy.mean);
}

#[test]
fn zero_iterations_write_empty_log_and_initial_parameters() {
    let (g, op) = ising_chain(4, 1.0, true);
    let mut m = random_rbm(4, 2, 0.1, 3);
    let initial = m.parameters();
    let mut sampler = Sampler::new(SamplerConfig::new(SamplerKind::Local), op.hilbert(), Some(&g), 1).unwrap();
    let mut opt = Optimizer::new(Rule::sgd(0.1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("zero");
    let out = run_vmc(&VmcConfig::new(100, 0), &op, &mut m, &mut sampler, &mut opt, &[], Some(&prefix)).unwrap();
    assert!(out.is_empty());
    assert!(crate::io::log::read_log(&with_extension(&prefix, "log")).unwrap().is_empty());
    let mut back = RbmSpin::<f64>::new(4, 2);
    crate::io::wf::read_wf(&with_extension(&prefix, "wf"), &mut back).unwrap();
    assert_eq!(back.parameters(), initial);
}

#[test]
fn log_records_observables() {
    let (g, op) = ising_chain(4, 1.0, true);
    let mut m = random_rbm(4, 2, 0.1, 3);
    let mut sampler = Sampler::new(SamplerConfig::new(SamplerKind::Local), op.hilbert(), Some(&g), 1).unwrap();
    let mut opt = Optimizer::new(Rule::sgd(0.01)).unwrap();
    let sx = crate::operator::graph_operator(op.hilbert(), &g, &[crate::operator::pauli_x()], &[]).unwrap();
    let obs = vec![("SigmaX".to_string(), sx)];
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("obs");
    run_vmc(&VmcConfig::new(64, 3), &op, &mut m, &mut sampler, &mut opt, &obs, Some(&prefix)).unwrap();
    let recs = crate::io::log::read_log(&with_extension(&prefix, "log")).unwrap();
    assert_eq!(recs.len(), 3);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r["Iteration"], i);
        for key in ["Mean", "Sigma", "Taucorr"] {
            assert!(r["Energy"][key].is_number());
            assert!(r["SigmaX"][key].is_number());
        }
        assert!(r["EnergyVariance"]["Mean"].is_number());
        assert_eq!(r["Acceptance"].as_array().unwrap().len(), 1);
    }
    let bad = vec![("Energy".to_string(), op.clone())];
    assert!(run_vmc(&VmcConfig::new(64, 1), &op, &mut m, &mut sampler, &mut opt, &bad, None).is_err());
}
