//! Ground-state search by variational Monte Carlo.
//!
//! Each iteration samples `|Ψ|²`, estimates the energy and the force
//! `F_k = <O_k* E_loc> - <O_k*><E_loc>`, optionally preconditions it with
//! stochastic reconfiguration (`(S + shift) δ = F`), and hands the result to
//! the optimizer as the gradient.

mod estimate;
mod sr;

pub use estimate::{
    estimate_energy, estimate_gradient, local_energies, local_energy, log_derivatives, stats_from_local,
    Covariance, EnergyStats,
};
pub use sr::{conjugate_gradient, sr_solve, SrConfig, SrSolver};

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::log::{stat_value, RunLog};
use crate::io::{wf::write_wf, with_extension};
use crate::machine::Machine;
use crate::operator::Operator;
use crate::optimizer::Optimizer;
use crate::sampler::Sampler;
use crate::scalar::Real;

pub(crate) use estimate::sample_weights;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The force is used directly as the gradient.
    Gradient,
    /// Stochastic reconfiguration.
    Sr,
}

fn default_method() -> Method {
    Method::Sr
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmcConfig {
    pub n_samples: usize,
    pub n_iter: usize,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub sr: SrConfig,
}

impl VmcConfig {
    pub fn new(n_samples: usize, n_iter: usize) -> Self {
        VmcConfig {
            n_samples,
            n_iter,
            method: Method::Sr,
            sr: SrConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::invalid(format!("n_samples must be at least 2, got {}", self.n_samples)));
        }
        self.sr.validate()
    }
}

/// Keys used by the log record itself; observables may not reuse them.
const RESERVED: [&str; 4] = ["Iteration", "Energy", "EnergyVariance", "Acceptance"];

#[derive(Clone, Debug, PartialEq)]
pub struct IterationResult<T> {
    pub iteration: usize,
    pub energy: EnergyStats<T>,
    /// Move acceptance per temperature.
    pub acceptance: Vec<f64>,
    pub observables: Vec<(String, EnergyStats<T>)>,
    /// Wall time of the iteration; kept out of the log so that logs depend
    /// only on the inputs.
    pub elapsed: Duration,
}

impl<T: Real> IterationResult<T> {
    /// The record written to `prefix.log`.
    pub fn to_json(&self) -> Value {
        let e = &self.energy;
        let mut rec = json!({
            "Iteration": self.iteration,
            "Energy": stat_value(e.mean.as_f64(), e.sigma.as_f64(), e.taucorr.as_f64()),
            "EnergyVariance": { "Mean": e.variance.as_f64() },
            "Acceptance": self.acceptance,
        });
        for (name, s) in &self.observables {
            rec[name.as_str()] = stat_value(s.mean.as_f64(), s.sigma.as_f64(), s.taucorr.as_f64());
        }
        rec
    }
}

/// Ground-state optimization loop.
pub struct Vmc<'a, T: Real, M: Machine<T> + ?Sized> {
    pub config: VmcConfig,
    pub hamiltonian: &'a Operator<T>,
    pub machine: &'a mut M,
    pub sampler: &'a mut Sampler<T>,
    pub optimizer: &'a mut Optimizer<T>,
    pub observables: &'a [(String, Operator<T>)],
}

impl<T: Real, M: Machine<T> + ?Sized> Vmc<'_, T, M> {
    fn check(&self) -> Result<()> {
        self.config.validate()?;
        let h = self.hamiltonian.hilbert();
        if self.sampler.hilbert() != h {
            return Err(Error::invalid("sampler and Hamiltonian use different Hilbert spaces"));
        }
        if self.machine.n_visible() != h.n_sites() {
            return Err(Error::DimensionMismatch { expected: h.n_sites(), found: self.machine.n_visible() });
        }
        for (name, op) in self.observables {
            if RESERVED.contains(&name.as_str()) {
                return Err(Error::invalid(format!("observable name {name:?} is reserved")));
            }
            if op.hilbert() != h {
                return Err(Error::invalid(format!("observable {name:?} uses a different Hilbert space")));
            }
        }
        Ok(())
    }

    /// One iteration: sample, estimate, update the parameters.
    pub fn step(&mut self, iteration: usize) -> Result<IterationResult<T>> {
        let start = Instant::now();
        let samples = self.sampler.sample(&*self.machine, self.config.n_samples)?;
        let machine = &*self.machine;
        let eloc = local_energies(self.hamiltonian, machine, &samples.configs)?;
        let energy = stats_from_local(&eloc, &samples)?;
        if !(energy.mean.is_finite() && energy.variance.is_finite()) {
            return Err(Error::NonFinite(format!(
                "energy is {} (variance {}) at iteration {iteration}",
                energy.mean, energy.variance
            )));
        }
        let observables = self
            .observables
            .iter()
            .map(|(name, op)| {
                let vals = local_energies(op, machine, &samples.configs)?;
                Ok((name.clone(), stats_from_local(&vals, &samples)?))
            })
            .collect::<Result<Vec<_>>>()?;

        let cov = Covariance::new(log_derivatives(machine, &samples.configs), sample_weights(&samples)?)?;
        let force = cov.force(&eloc);
        let grad = match self.config.method {
            Method::Gradient => force,
            Method::Sr => sr_solve(&cov, &force, &self.config.sr)?,
        };
        let mut params = machine.parameters();
        self.optimizer
            .update_complex(&mut params, &grad)
            .map_err(|e| Error::NonFinite(format!("iteration {iteration}: {e}")))?;
        self.machine.set_parameters(&params)?;
        Ok(IterationResult {
            iteration,
            energy,
            acceptance: samples.acceptance,
            observables,
            elapsed: start.elapsed(),
        })
    }

    /// Runs `n_iter` iterations. With a prefix, `prefix.log` is rewritten
    /// after every iteration and the final parameters go to `prefix.wf`.
    pub fn run(&mut self, output_prefix: Option<&Path>) -> Result<Vec<IterationResult<T>>> {
        self.check()?;
        let mut log = output_prefix.map(RunLog::create).transpose()?;
        let mut out = Vec::with_capacity(self.config.n_iter);
        for it in 0..self.config.n_iter {
            let r = self.step(it)?;
            if let Some(log) = log.as_mut() {
                log.push(&r.to_json())?;
            }
            out.push(r);
        }
        if let Some(prefix) = output_prefix {
            write_wf(&with_extension(prefix, "wf"), &*self.machine)?;
        }
        Ok(out)
    }
}

/// Convenience wrapper around [`Vmc::run`].
#[allow(clippy::too_many_arguments)]
pub fn run_vmc<T: Real, M: Machine<T> + ?Sized>(
    config: &VmcConfig,
    hamiltonian: &Operator<T>,
    machine: &mut M,
    sampler: &mut Sampler<T>,
    optimizer: &mut Optimizer<T>,
    observables: &[(String, Operator<T>)],
    output_prefix: Option<&Path>,
) -> Result<Vec<IterationResult<T>>> {
    Vmc {
        config: config.clone(),
        hamiltonian,
        machine,
        sampler,
        optimizer,
        observables,
    }
    .run(output_prefix)
}

#[cfg(test)]
mod tests;
