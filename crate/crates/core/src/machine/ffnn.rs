use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{creal, czero, ln_cosh, tanh, Real, C};

use super::{check_n_par, Machine};

/// Elementwise activation.
///
/// `Relu` on complex input passes `z` through when `Re z > 0` and outputs 0
/// otherwise; its derivative uses the same gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Lncosh,
}

impl Activation {
    fn apply<T: Real>(self, z: C<T>) -> C<T> {
        match self {
            Activation::Relu => {
                if z.re > T::zero() {
                    z
                } else {
                    czero()
                }
            }
            Activation::Tanh => tanh(z),
            Activation::Lncosh => ln_cosh(z),
        }
    }

    fn derivative<T: Real>(self, z: C<T>) -> C<T> {
        match self {
            Activation::Relu => {
                if z.re > T::zero() {
                    creal(T::one())
                } else {
                    czero()
                }
            }
            Activation::Tanh => {
                let t = tanh(z);
                creal::<T>(T::one()) - t * t
            }
            Activation::Lncosh => tanh(z),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayerSpec {
    /// `y = W x + b` with `outputs` rows.
    Dense { outputs: usize },
    Activation { function: Activation },
}

#[derive(Clone, Debug, PartialEq)]
enum Layer<T> {
    Dense {
        inputs: usize,
        outputs: usize,
        w: Vec<C<T>>,
        b: Vec<C<T>>,
    },
    Activation(Activation),
}

/// Feed-forward network; `log Ψ` is the sum of the final layer's outputs.
///
/// Parameter layout: for each dense layer in order, `W (outputs x inputs,
/// row-major)` followed by `b (outputs)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ffnn<T> {
    n_visible: usize,
    layers: Vec<Layer<T>>,
}

impl<T: Real> Ffnn<T> {
    pub fn new(n_visible: usize, specs: &[LayerSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        let mut width = n_visible;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            match *spec {
                LayerSpec::Dense { outputs } => {
                    if outputs == 0 {
                        return Err(Error::invalid("dense layer with zero outputs"));
                    }
                    layers.push(Layer::Dense {
                        inputs: width,
                        outputs,
                        w: vec![czero(); width * outputs],
                        b: vec![czero(); outputs],
                    });
                    width = outputs;
                }
                LayerSpec::Activation { function } => layers.push(Layer::Activation(function)),
            }
        }
        Ok(Ffnn { n_visible, layers })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense { outputs, .. } => LayerSpec::Dense { outputs: *outputs },
                Layer::Activation(function) => LayerSpec::Activation { function: *function },
            })
            .collect()
    }

    /// Inputs of every layer, followed by the final output.
    fn forward(&self, v: &[T]) -> Vec<Vec<C<T>>> {
        assert_eq!(v.len(), self.n_visible, "configuration length");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(v.iter().map(|&x| creal(x)).collect::<Vec<_>>());
        for layer in &self.layers {
            let x = acts.last().expect("input");
            let y = match layer {
                Layer::Dense { inputs, outputs, w, b } => (0..*outputs)
                    .map(|o| {
                        w[o * inputs..(o + 1) * inputs]
                            .iter()
                            .zip(x)
                            .fold(b[o], |acc, (wi, xi)| acc + *wi * *xi)
                    })
                    .collect(),
                Layer::Activation(f) => x.iter().map(|&z| f.apply(z)).collect(),
            };
            acts.push(y);
        }
        acts
    }
}

impl<T: Real> Machine<T> for Ffnn<T> {
    fn kind(&self) -> &'static str {
        "Ffnn"
    }

    fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.n_visible];
        for l in &self.layers {
            if let Layer::Dense { outputs, .. } = l {
                s.push(*outputs);
            }
        }
        s
    }

    fn n_visible(&self) -> usize {
        self.n_visible
    }

    fn n_par(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense { w, b, .. } => w.len() + b.len(),
                Layer::Activation(_) => 0,
            })
            .sum()
    }

    fn parameters(&self) -> Vec<C<T>> {
        let mut p = Vec::with_capacity(self.n_par());
        for l in &self.layers {
            if let Layer::Dense { w, b, .. } = l {
                p.extend_from_slice(w);
                p.extend_from_slice(b);
            }
        }
        p
    }

    fn set_parameters(&mut self, p: &[C<T>]) -> Result<()> {
        check_n_par(self.n_par(), p)?;
        let mut at = 0;
        for l in self.layers.iter_mut() {
            if let Layer::Dense { w, b, .. } = l {
                let (nw, nb) = (w.len(), b.len());
                w.copy_from_slice(&p[at..at + nw]);
                b.copy_from_slice(&p[at + nw..at + nw + nb]);
                at += nw + nb;
            }
        }
        Ok(())
    }

    fn log_val(&self, v: &[T]) -> C<T> {
        let acts = self.forward(v);
        acts.last().expect("output").iter().fold(czero(), |acc, z| acc + z)
    }

    fn der_log(&self, v: &[T]) -> Vec<C<T>> {
        let acts = self.forward(v);
        let mut out = vec![czero(); self.n_par()];
        let mut end = out.len();
        let mut g = vec![creal(T::one()); acts.last().expect("output").len()];
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let x = &acts[k];
            match layer {
                Layer::Dense { inputs, outputs, w, .. } => {
                    let start = end - w.len() - outputs;
                    let (dw, db) = out[start..end].split_at_mut(w.len());
                    db.copy_from_slice(&g);
                    let mut gin = vec![czero(); *inputs];
                    for o in 0..*outputs {
                        let row = &w[o * inputs..(o + 1) * inputs];
                        for i in 0..*inputs {
                            dw[o * inputs + i] = g[o] * x[i];
                            gin[i] += g[o] * row[i];
                        }
                    }
                    g = gin;
                    end = start;
                }
                Layer::Activation(f) => {
                    for (gi, &xi) in g.iter_mut().zip(x) {
                        *gi = *gi * f.derivative(xi);
                    }
                }
            }
        }
        out
    }
}
