use crate::error::{Error, Result};
use crate::hilbert::HilbertIndex;
use crate::scalar::{creal, czero, Real, C};

use super::{check_n_par, Machine};

/// Tabulated wavefunction: one parameter per basis state, holding its
/// log-amplitude in [`HilbertIndex`] order. `O_k(σ) = δ_{k,index(σ)}`.
///
/// A zero amplitude is stored as a log-amplitude with `re = -inf`.
#[derive(Clone, Debug)]
pub struct Lookup<T> {
    index: HilbertIndex<T>,
    log_psi: Vec<C<T>>,
}

impl<T: Real> Lookup<T> {
    pub fn new(index: HilbertIndex<T>) -> Self {
        let n = index.n_states();
        Lookup {
            index,
            log_psi: vec![czero(); n],
        }
    }

    /// Machine holding the amplitudes `psi` (not logs).
    pub fn from_amplitudes(index: HilbertIndex<T>, psi: &[C<T>]) -> Result<Self> {
        let mut m = Self::new(index);
        check_n_par(m.log_psi.len(), psi)?;
        m.log_psi = psi
            .iter()
            .map(|z| {
                if z.norm_sqr() == T::zero() {
                    creal(T::neg_infinity())
                } else {
                    z.ln()
                }
            })
            .collect();
        Ok(m)
    }

    pub fn index(&self) -> &HilbertIndex<T> {
        &self.index
    }

    fn position(&self, v: &[T]) -> Result<usize> {
        self.index.state_to_number(v).map_err(|_| {
            Error::InvalidConfiguration(format!("{v:?} is not a basis state of the lookup table"))
        })
    }
}

impl<T: Real> Machine<T> for Lookup<T> {
    fn kind(&self) -> &'static str {
        "Lookup"
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.index.space().n_sites(), self.log_psi.len()]
    }

    fn n_visible(&self) -> usize {
        self.index.space().n_sites()
    }

    fn n_par(&self) -> usize {
        self.log_psi.len()
    }

    fn parameters(&self) -> Vec<C<T>> {
        self.log_psi.clone()
    }

    fn set_parameters(&mut self, p: &[C<T>]) -> Result<()> {
        check_n_par(self.n_par(), p)?;
        self.log_psi.copy_from_slice(p);
        Ok(())
    }

    fn log_val(&self, v: &[T]) -> C<T> {
        self.log_psi[self.position(v).expect("state in lookup table")]
    }

    fn der_log(&self, v: &[T]) -> Vec<C<T>> {
        let mut out = vec![czero(); self.log_psi.len()];
        out[self.position(v).expect("state in lookup table")] = creal(T::one());
        out
    }

    fn try_log_val(&self, v: &[T]) -> Result<C<T>> {
        Ok(self.log_psi[self.position(v)?])
    }
}
