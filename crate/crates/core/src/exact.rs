//! Reference solvers: dense diagonalization, Lanczos and imaginary-time
//! propagation. Vectors are in [`HilbertIndex`] order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertIndex;
use crate::linalg::{hermitian_eigen, tridiagonal_eigen};
use crate::operator::{Operator, SparseMatrix};
use crate::scalar::{cplx, czero, dot, norm_sqr, Real, C};

/// Largest space accepted by [`full_ed`].
pub const MAX_FULL_ED_STATES: usize = 1 << 13;
/// Largest space accepted by [`lanczos_ed`].
pub const MAX_LANCZOS_STATES: usize = 1 << 24;
/// Largest space accepted by [`imaginary_time_propagation`].
pub const MAX_PROPAGATION_STATES: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct EdResult<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Unit-norm eigenvectors matching `eigenvalues`, when requested.
    pub eigenvectors: Option<Vec<Vec<C<T>>>>,
}

fn check_size(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SpaceTooLarge {
            n_states: n as u128,
            limit: limit as u128,
        });
    }
    Ok(())
}

/// Complete spectrum of a Hermitian operator by dense diagonalization.
pub fn full_ed<T: Real>(op: &Operator<T>, compute_eigenvectors: bool) -> Result<EdResult<T>> {
    let n = usize::try_from(op.hilbert().n_states()).unwrap_or(usize::MAX);
    check_size(n, MAX_FULL_ED_STATES)?;
    let index = op.hilbert().index()?;
    let h = op.to_dense(&index)?;
    let defect = h.hermiticity_defect();
    if defect.as_f64() > 1e-10 {
        return Err(Error::invalid(format!(
            "operator is not Hermitian (max |H_ij - conj H_ji| = {defect:e})"
        )));
    }
    let (eigenvalues, eigenvectors) = hermitian_eigen(&h, compute_eigenvectors)?;
    Ok(EdResult {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LanczosOptions {
    pub first_n: usize,
    pub compute_eigenvectors: bool,
    /// Largest Krylov dimension before giving up.
    pub max_iter: usize,
    /// Convergence threshold on `‖Hx - θx‖ / max(1, |θ|)` for each wanted pair.
    pub tol: f64,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            first_n: 1,
            compute_eigenvectors: false,
            max_iter: 300,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Lowest `first_n` eigenpairs by Lanczos with full reorthogonalization.
///
/// A single start vector sees each degenerate level once, so the returned
/// eigenvalues are the distinct levels reachable from it.
pub fn lanczos_ed<T: Real>(op: &Operator<T>, opts: &LanczosOptions) -> Result<EdResult<T>> {
    let n = usize::try_from(op.hilbert().n_states()).unwrap_or(usize::MAX);
    check_size(n, MAX_LANCZOS_STATES)?;
    if opts.first_n == 0 {
        return Err(Error::invalid("first_n must be positive"));
    }
    if !op.terms_hermitian(T::of(1e-10)) {
        return Err(Error::invalid("operator has a non-Hermitian term"));
    }
    let index = op.hilbert().index()?;
    let h = op.to_sparse(&index)?;
    lanczos_sparse(&h, opts)
}

/// [`lanczos_ed`] on an assembled matrix.
pub fn lanczos_sparse<T: Real>(h: &SparseMatrix<T>, opts: &LanczosOptions) -> Result<EdResult<T>> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::invalid("empty Hilbert space"));
    }
    let want = opts.first_n.min(n);
    let max_k = opts.max_iter.max(want).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<C<T>> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            cplx(T::of(re), T::of(im))
        })
        .collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<C<T>>> = Vec::new();
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let tol = T::of(opts.tol);
    let breakdown = T::of(1e-12);
    let mut last_residual;

    loop {
        let mut w = h.matvec(&v);
        let a = dot(&v, &w).re;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= *vi * a;
        }
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= *pi * b;
            }
        }
        basis.push(v);
        alpha.push(a);
        // Two Gram-Schmidt passes keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= *qi * c;
                }
            }
        }
        let b = norm_sqr(&w).sqrt();
        let k = alpha.len();
        let exhausted = b <= breakdown || k == n;
        // The small eigenproblem grows cubically; test convergence periodically.
        if !(exhausted || k >= max_k || k % 5 == 0 || k < 10) {
            beta.push(b);
            v = w.into_iter().map(|x| x / b).collect();
            continue;
        }

        let (theta, s) = tridiagonal_eigen(&alpha, &beta, true)?;
        let s = s.expect("vectors requested");
        let got = want.min(k);
        let residual = (0..got)
            .map(|i| (b * s[i][k - 1].abs() / T::one().max(theta[i].abs())).as_f64())
            .fold(0.0, f64::max);
        last_residual = residual;
        if exhausted || (got == want && residual <= tol.as_f64()) {
            let eigenvalues = theta[..got].to_vec();
            let eigenvectors = opts.compute_eigenvectors.then(|| {
                (0..got)
                    .map(|i| {
                        let mut x = vec![czero::<T>(); n];
                        for (q, &c) in basis.iter().zip(&s[i]) {
                            for (xi, qi) in x.iter_mut().zip(q) {
                                *xi += *qi * c;
                            }
                        }
                        normalize(&mut x);
                        x
                    })
                    .collect()
            });
            return Ok(EdResult {
                eigenvalues,
                eigenvectors,
            });
        }
        if k >= max_k {
            break;
        }
        beta.push(b);
        v = w.into_iter().map(|x| x / b).collect();
    }
    Err(Error::NotConverged {
        iterations: max_k,
        residual: last_residual,
    })
}

fn normalize<T: Real>(v: &mut [C<T>]) {
    let nrm = norm_sqr(v).sqrt();
    for x in v.iter_mut() {
        *x = *x / nrm;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Propagation<T> {
    /// Normalized state at the final time.
    pub state: Vec<C<T>>,
    /// `τ` at each recorded point, starting with 0.
    pub times: Vec<T>,
    /// `<ψ|H|ψ>` at each recorded point.
    pub energies: Vec<T>,
}

/// Integrates `dψ/dτ = -(H - <H>)ψ` with fixed-step RK4, renormalizing after
/// every step. `psi0` is in [`HilbertIndex`] order.
pub fn imaginary_time_propagation<T: Real>(
    op: &Operator<T>,
    index: &HilbertIndex<T>,
    psi0: &[C<T>],
    tau_max: T,
    dt: T,
) -> Result<Propagation<T>> {
    check_size(index.n_states(), MAX_PROPAGATION_STATES)?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(tau_max >= T::zero()) || !tau_max.is_finite() {
        return Err(Error::invalid(format!("tau_max must be non-negative, got {tau_max}")));
    }
    if psi0.len() != index.n_states() {
        return Err(Error::DimensionMismatch {
            expected: index.n_states(),
            found: psi0.len(),
        });
    }
    let h = op.to_sparse(index)?;
    let mut psi = psi0.to_vec();
    if norm_sqr(&psi) == T::zero() {
        return Err(Error::invalid("initial state is zero"));
    }
    normalize(&mut psi);
    let n_steps = (tau_max / dt).round().to_usize().unwrap_or(0);

    let energy = |x: &[C<T>]| dot(x, &h.matvec(x)).re;
    let rhs = |x: &[C<T>]| -> Vec<C<T>> {
        let hx = h.matvec(x);
        let e = dot(x, &hx).re / norm_sqr(x);
        hx.iter().zip(x).map(|(a, b)| -(*a - *b * e)).collect()
    };
    let axpy = |x: &[C<T>], k: &[C<T>], s: T| -> Vec<C<T>> { x.iter().zip(k).map(|(a, b)| *a + *b * s).collect() };

    let half = dt / T::of(2.0);
    let sixth = dt / T::of(6.0);
    let mut times = vec![T::zero()];
    let mut energies = vec![energy(&psi)];
    for step in 1..=n_steps {
        let k1 = rhs(&psi);
        let k2 = rhs(&axpy(&psi, &k1, half));
        let k3 = rhs(&axpy(&psi, &k2, half));
        let k4 = rhs(&axpy(&psi, &k3, dt));
        for i in 0..psi.len() {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * T::of(2.0) + k4[i]) * sixth;
        }
        let nrm = norm_sqr(&psi);
        if !nrm.is_finite() || nrm == T::zero() {
            return Err(Error::NonFinite(format!(
                "state diverged at step {step} (τ = {}); use a smaller dt",
                T::of_usize(step) * dt
            )));
        }
        normalize(&mut psi);
        times.push(T::of_usize(step) * dt);
        energies.push(energy(&psi));
    }
    Ok(Propagation {
        state: psi,
        times,
        energies,
    })
}
