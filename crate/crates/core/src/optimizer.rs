//! First-order update rules on the real view of complex parameters.
//!
//! The real view of `α ∈ C^m` is `[Re α_0, Im α_0, Re α_1, ...]`. Drivers
//! pass the complex gradient `F` through the same view, so plain SGD on the
//! real view is exactly `α <- α - λ F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cplx, Real, C};

fn default_lr() -> f64 {
    1e-3
}
fn default_sgd_lr() -> f64 {
    1e-2
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}
fn default_decay() -> f64 {
    0.9
}
fn default_rho() -> f64 {
    0.95
}

/// Update rule and hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Rule {
    Sgd {
        #[serde(default = "default_sgd_lr")]
        learning_rate: f64,
    },
    AdaGrad {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_eps")]
        epsilon: f64,
    },
    AdaDelta {
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_eps")]
        epsilon: f64,
    },
    AdaMax {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
    },
    AmsGrad {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        epsilon: f64,
    },
    RmsProp {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_eps")]
        epsilon: f64,
    },
}

impl Rule {
    pub fn sgd(learning_rate: f64) -> Self {
        Rule::Sgd { learning_rate }
    }

    pub fn ada_grad() -> Self {
        Rule::AdaGrad {
            learning_rate: default_lr(),
            epsilon: default_eps(),
        }
    }

    pub fn ada_delta() -> Self {
        Rule::AdaDelta {
            rho: default_rho(),
            epsilon: default_eps(),
        }
    }

    pub fn ada_max() -> Self {
        Rule::AdaMax {
            learning_rate: default_lr(),
            beta1: default_beta1(),
            beta2: default_beta2(),
        }
    }

    pub fn ams_grad() -> Self {
        Rule::AmsGrad {
            learning_rate: default_lr(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_eps(),
        }
    }

    pub fn rms_prop() -> Self {
        Rule::RmsProp {
            learning_rate: default_lr(),
            decay: default_decay(),
            epsilon: default_eps(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Rule::Sgd { .. } => "Sgd",
            Rule::AdaGrad { .. } => "AdaGrad",
            Rule::AdaDelta { .. } => "AdaDelta",
            Rule::AdaMax { .. } => "AdaMax",
            Rule::AmsGrad { .. } => "AmsGrad",
            Rule::RmsProp { .. } => "RmsProp",
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &str, x: f64, lo: f64, hi: f64| {
            if x.is_finite() && x >= lo && x <= hi {
                Ok(())
            } else {
                Err(Error::invalid(format!("{} {name} = {x} outside [{lo}, {hi}]", self.name())))
            }
        };
        let inf = f64::MAX;
        match *self {
            Rule::Sgd { learning_rate } => check("learning_rate", learning_rate, 0.0, inf),
            Rule::AdaGrad { learning_rate, epsilon } => {
                check("learning_rate", learning_rate, 0.0, inf)?;
                check("epsilon", epsilon, 0.0, inf)
            }
            Rule::AdaDelta { rho, epsilon } => {
                check("rho", rho, 0.0, 1.0)?;
                check("epsilon", epsilon, 0.0, inf)
            }
            Rule::AdaMax { learning_rate, beta1, beta2 } => {
                check("learning_rate", learning_rate, 0.0, inf)?;
                check("beta1", beta1, 0.0, 1.0 - f64::EPSILON)?;
                check("beta2", beta2, 0.0, 1.0)
            }
            Rule::AmsGrad { learning_rate, beta1, beta2, epsilon } => {
                check("learning_rate", learning_rate, 0.0, inf)?;
                check("beta1", beta1, 0.0, 1.0)?;
                check("beta2", beta2, 0.0, 1.0)?;
                check("epsilon", epsilon, 0.0, inf)
            }
            Rule::RmsProp { learning_rate, decay, epsilon } => {
                check("learning_rate", learning_rate, 0.0, inf)?;
                check("decay", decay, 0.0, 1.0)?;
                check("epsilon", epsilon, 0.0, inf)
            }
        }
    }
}

/// Rule plus its per-parameter state.
#[derive(Clone, Debug)]
pub struct Optimizer<T> {
    rule: Rule,
    t: u64,
    s1: Vec<T>,
    s2: Vec<T>,
    s3: Vec<T>,
}

impl<T: Real> Optimizer<T> {
    pub fn new(rule: Rule) -> Result<Self> {
        rule.validate()?;
        Ok(Optimizer {
            rule,
            t: 0,
            s1: Vec::new(),
            s2: Vec::new(),
            s3: Vec::new(),
        })
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Learning rate of the rule (1 for AdaDelta, which has none).
    pub fn learning_rate(&self) -> f64 {
        match self.rule {
            Rule::Sgd { learning_rate }
            | Rule::AdaGrad { learning_rate, .. }
            | Rule::AdaMax { learning_rate, .. }
            | Rule::AmsGrad { learning_rate, .. }
            | Rule::RmsProp { learning_rate, .. } => learning_rate,
            Rule::AdaDelta { .. } => 1.0,
        }
    }

    /// One step on the real view, in place.
    pub fn update(&mut self, params: &mut [T], grad: &[T]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                found: grad.len(),
            });
        }
        if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {k} is {}", grad[k])));
        }
        let n = params.len();
        if self.s1.len() != n {
            if self.t != 0 {
                return Err(Error::DimensionMismatch {
                    expected: self.s1.len(),
                    found: n,
                });
            }
            self.s1 = vec![T::zero(); n];
            self.s2 = vec![T::zero(); n];
            self.s3 = vec![T::zero(); n];
        }
        self.t += 1;
        let one = T::one();
        match self.rule {
            Rule::Sgd { learning_rate } => {
                let lr = T::of(learning_rate);
                for (x, &g) in params.iter_mut().zip(grad) {
                    *x -= lr * g;
                }
            }
            Rule::AdaGrad { learning_rate, epsilon } => {
                let (lr, eps) = (T::of(learning_rate), T::of(epsilon));
                for k in 0..n {
                    let g = grad[k];
                    self.s1[k] += g * g;
                    params[k] -= lr * g / (self.s1[k].sqrt() + eps);
                }
            }
            Rule::AdaDelta { rho, epsilon } => {
                let (rho, eps) = (T::of(rho), T::of(epsilon));
                for k in 0..n {
                    let g = grad[k];
                    self.s1[k] = rho * self.s1[k] + (one - rho) * g * g;
                    let dx = -((self.s2[k] + eps).sqrt() / (self.s1[k] + eps).sqrt()) * g;
                    self.s2[k] = rho * self.s2[k] + (one - rho) * dx * dx;
                    params[k] += dx;
                }
            }
            Rule::AdaMax { learning_rate, beta1, beta2 } => {
                let (lr, b1, b2) = (T::of(learning_rate), T::of(beta1), T::of(beta2));
                let step = lr / (one - b1.powi(self.t.min(i32::MAX as u64) as i32));
                for k in 0..n {
                    let g = grad[k];
                    self.s1[k] = b1 * self.s1[k] + (one - b1) * g;
                    self.s2[k] = (b2 * self.s2[k]).max(g.abs());
                    if self.s2[k] > T::zero() {
                        params[k] -= step * self.s1[k] / self.s2[k];
                    }
                }
            }
            Rule::AmsGrad { learning_rate, beta1, beta2, epsilon } => {
                // s2: second moment, s3: its running maximum
                let (lr, b1, b2, eps) = (T::of(learning_rate), T::of(beta1), T::of(beta2), T::of(epsilon));
                for k in 0..n {
                    let g = grad[k];
                    self.s1[k] = b1 * self.s1[k] + (one - b1) * g;
                    self.s2[k] = b2 * self.s2[k] + (one - b2) * g * g;
                    self.s3[k] = self.s3[k].max(self.s2[k]);
                    params[k] -= lr * self.s1[k] / (self.s3[k].sqrt() + eps);
                }
            }
            Rule::RmsProp { learning_rate, decay, epsilon } => {
                let (lr, d, eps) = (T::of(learning_rate), T::of(decay), T::of(epsilon));
                for k in 0..n {
                    let g = grad[k];
                    self.s1[k] = d * self.s1[k] + (one - d) * g * g;
                    params[k] -= lr * g / (self.s1[k].sqrt() + eps);
                }
            }
        }
        Ok(())
    }

    /// One step on complex parameters with complex gradient `F`.
    pub fn update_complex(&mut self, params: &mut [C<T>], grad: &[C<T>]) -> Result<()> {
        let mut x = to_real_view(params);
        self.update(&mut x, &to_real_view(grad))?;
        params.copy_from_slice(&from_real_view(&x)?);
        Ok(())
    }
}

/// `[Re α_0, Im α_0, Re α_1, Im α_1, ...]`.
pub fn to_real_view<T: Real>(z: &[C<T>]) -> Vec<T> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Inverse of [`to_real_view`].
pub fn from_real_view<T: Real>(x: &[T]) -> Result<Vec<C<T>>> {
    if x.len() % 2 != 0 {
        return Err(Error::invalid(format!("real view has odd length {}", x.len())));
    }
    Ok(x.chunks_exact(2).map(|p| cplx(p[0], p[1])).collect())
}
