use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::scalar::{czero, dot, norm_sqr, Real, C};

use super::estimate::Covariance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrSolver {
    /// Dense Cholesky factorization of `S + shift`.
    Exact,
    /// Conjugate gradient on products with `S`.
    Iterative,
}

fn default_shift() -> f64 {
    0.01
}
fn default_solver() -> SrSolver {
    SrSolver::Iterative
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrConfig {
    #[serde(default = "default_shift")]
    pub diag_shift: f64,
    #[serde(default = "default_solver")]
    pub solver: SrSolver,
    /// Relative residual `‖b - Ax‖ / ‖b‖` at which CG stops.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SrConfig {
    fn default() -> Self {
        SrConfig {
            diag_shift: default_shift(),
            solver: default_solver(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl SrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.diag_shift >= 0.0) || !self.diag_shift.is_finite() {
            return Err(Error::invalid(format!("diag_shift must be finite and >= 0, got {}", self.diag_shift)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("sr tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("sr max_iter must be positive"));
        }
        Ok(())
    }
}

/// Solves `(S + diag_shift) δ = F`. The optimizer then applies `δ` in place
/// of the plain gradient.
pub fn sr_solve<T: Real>(cov: &Covariance<T>, f: &[C<T>], cfg: &SrConfig) -> Result<Vec<C<T>>> {
    cfg.validate()?;
    if f.len() != cov.n_par() {
        return Err(Error::DimensionMismatch { expected: cov.n_par(), found: f.len() });
    }
    let shift = T::of(cfg.diag_shift);
    match cfg.solver {
        SrSolver::Exact => {
            let mut s = cov.matrix();
            for k in 0..s.rows() {
                s[(k, k)] += shift;
            }
            let l = cholesky(&s).map_err(|e| {
                Error::Singular(format!("S is not positive definite ({e}); use a positive diag_shift"))
            })?;
            Ok(cholesky_solve(&l, f))
        }
        SrSolver::Iterative => conjugate_gradient(
            |x| {
                let mut y = cov.apply(x);
                for (yk, xk) in y.iter_mut().zip(x) {
                    *yk += xk * shift;
                }
                y
            },
            f,
            cfg.tol,
            cfg.max_iter,
        ),
    }
}

/// Conjugate gradient for a Hermitian positive definite operator `a`,
/// starting from zero.
pub fn conjugate_gradient<T: Real>(
    a: impl Fn(&[C<T>]) -> Vec<C<T>>,
    b: &[C<T>],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<C<T>>> {
    let n = b.len();
    let mut x = vec![czero::<T>(); n];
    let bnorm = norm_sqr(b).sqrt();
    if bnorm == T::zero() {
        return Ok(x);
    }
    let target = T::of(tol) * bnorm;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = norm_sqr(&r);
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        let ap = a(&p);
        let pap = dot(&p, &ap).re;
        if !(pap > T::zero()) {
            return Err(Error::Singular(format!(
                "operator is not positive definite (p·Ap = {pap:e}); use a positive diag_shift"
            )));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = norm_sqr(&r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
        rr = rr_new;
    }
    if rr.sqrt() <= target {
        return Ok(x);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: (rr.sqrt() / bnorm).as_f64(),
    })
}
