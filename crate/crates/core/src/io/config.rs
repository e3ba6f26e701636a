//! Run configuration files and the driver dispatch behind the CLI.
//!
//! A config is one JSON object with the sections `graph`, `hilbert`,
//! `operator`, `machine`, `sampler`, `optimizer` and `driver`, plus a master
//! `seed` and an optional `output_prefix`. Every section rejects unknown keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{with_extension, write_atomic, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::exact::{full_ed, imaginary_time_propagation, lanczos_ed, LanczosOptions, MAX_FULL_ED_STATES};
use crate::hilbert::{HilbertIndex, HilbertSpace};
use crate::io::wf::read_wf;
use crate::lattice::{Edge, Graph};
use crate::linalg::DenseMatrix;
use crate::machine::{Ffnn, Jastrow, LayerSpec, Machine, RbmMultiVal, RbmSpin, RbmSpinSymm};
use crate::operator::{bose_hubbard, graph_operator, heisenberg_with_sign_rule, ising, Operator};
use crate::optimizer::{Optimizer, Rule};
use crate::sampler::{chain_seed, Sampler, SamplerConfig, SamplerKind};
use crate::scalar::{cplx, C};
use crate::supervised::{run_supervised, SupervisedConfig, SupervisedDataset};
use crate::tomography::{generate_measurements, parse_bases, read_records, run_qsr, QsrConfig};
use crate::vmc::{run_vmc, Method, SrConfig, VmcConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Hypercube {
        length: usize,
        #[serde(default = "one")]
        n_dim: usize,
        #[serde(default = "yes")]
        pbc: bool,
    },
    /// Edges as `[i, j]` or `[i, j, color]`.
    Custom { edges: Vec<Vec<usize>> },
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Hypercube { length, n_dim, pbc } => Graph::hypercube(*length, *n_dim, *pbc),
            GraphSpec::Custom { edges } => {
                let e = edges
                    .iter()
                    .map(|e| match e.as_slice() {
                        [i, j] => Ok((*i, *j, 0)),
                        [i, j, c] => Ok((*i, *j, *c)),
                        _ => Err(Error::invalid(format!("graph edge {e:?} must be [i, j] or [i, j, color]"))),
                    })
                    .collect::<Result<Vec<Edge>>>()?;
                Graph::custom(&e)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HilbertSpec {
    Spin {
        #[serde(default = "half")]
        s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        total_sz: Option<f64>,
    },
    Boson {
        n_max: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_particles: Option<usize>,
    },
}

fn half() -> f64 {
    0.5
}

impl HilbertSpec {
    pub fn build(&self, graph: &Graph) -> Result<HilbertSpace<f64>> {
        match self {
            HilbertSpec::Spin { s, total_sz } => HilbertSpace::spin(*s, graph, *total_sz),
            HilbertSpec::Boson { n_max, n_particles } => HilbertSpace::boson(*n_max, graph, *n_particles),
        }
    }
}

/// Matrix as rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

fn matrix(m: &MatrixSpec) -> Result<DenseMatrix<f64>> {
    let rows: Vec<Vec<C<f64>>> = m.iter().map(|r| r.iter().map(|&[re, im]| cplx(re, im)).collect()).collect();
    DenseMatrix::from_rows(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalTermSpec {
    pub acting_on: Vec<usize>,
    pub matrix: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondOpSpec {
    #[serde(default)]
    pub color: usize,
    pub matrix: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Ising {
        h: f64,
    },
    Heisenberg {
        /// Marshall sign gauge; defaults to on for bipartite graphs.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sign_rule: Option<bool>,
    },
    BoseHubbard {
        #[serde(rename = "U")]
        u: f64,
        #[serde(default)]
        mu: f64,
    },
    Local {
        terms: Vec<LocalTermSpec>,
    },
    Graph {
        #[serde(default)]
        site_ops: Vec<MatrixSpec>,
        #[serde(default)]
        bond_ops: Vec<BondOpSpec>,
    },
}

impl OperatorSpec {
    pub fn build(&self, hilbert: &HilbertSpace<f64>, graph: &Graph) -> Result<Operator<f64>> {
        match self {
            OperatorSpec::Ising { h } => ising(hilbert, graph, *h),
            OperatorSpec::Heisenberg { sign_rule } => {
                heisenberg_with_sign_rule(hilbert, graph, sign_rule.unwrap_or_else(|| graph.is_bipartite()))
            }
            OperatorSpec::BoseHubbard { u, mu } => bose_hubbard(hilbert, graph, *u, *mu),
            OperatorSpec::Local { terms } => {
                let mut op = Operator::zero(hilbert);
                for t in terms {
                    op.push_term(t.acting_on.clone(), matrix(&t.matrix)?)?;
                }
                Ok(op)
            }
            OperatorSpec::Graph { site_ops, bond_ops } => {
                let sites = site_ops.iter().map(matrix).collect::<Result<Vec<_>>>()?;
                let bonds = bond_ops
                    .iter()
                    .map(|b| Ok((b.color, matrix(&b.matrix)?)))
                    .collect::<Result<Vec<_>>>()?;
                graph_operator(hilbert, graph, &sites, &bonds)
            }
        }
    }
}

fn default_sigma() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineKind {
    RbmSpin,
    RbmSpinSymm,
    RbmMultiVal,
    Ffnn,
    Jastrow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    pub kind: MachineKind,
    /// Hidden units (RBM kinds); defaults to `alpha * n_visible`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_hidden: Option<usize>,
    /// Hidden-unit density; 1 when neither this nor `n_hidden` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    /// Layer stack (ffnn only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerSpec>>,
    /// Width of the normal initial parameters.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Parameter file to start from instead of random values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<PathBuf>,
}

fn bad_machine(key: &str, message: impl Into<String>) -> Error {
    Error::Config { path: format!("machine.{key}"), message: message.into() }
}

impl MachineSpec {
    fn hidden(&self, n: usize) -> Result<usize> {
        match (self.n_hidden, self.alpha) {
            (Some(m), None) => Ok(m),
            (None, Some(a)) => Ok(a * n),
            (None, None) => Ok(n),
            (Some(_), Some(_)) => Err(bad_machine("alpha", "give n_hidden or alpha, not both")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rbm = matches!(self.kind, MachineKind::RbmSpin | MachineKind::RbmSpinSymm | MachineKind::RbmMultiVal);
        if !rbm && (self.n_hidden.is_some() || self.alpha.is_some()) {
            return Err(bad_machine("n_hidden", format!("{:?} has no hidden units", self.kind)));
        }
        if self.kind == MachineKind::RbmSpinSymm && self.n_hidden.is_some() {
            return Err(bad_machine("n_hidden", "rbm_spin_symm takes alpha"));
        }
        if (self.kind == MachineKind::Ffnn) != self.layers.is_some() {
            return Err(bad_machine("layers", "layers are required by ffnn and only allowed there"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(bad_machine("sigma", format!("must be finite and >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn build(&self, hilbert: &HilbertSpace<f64>, graph: &Graph, seed: u64) -> Result<Box<dyn Machine<f64>>> {
        self.validate()?;
        let n = hilbert.n_sites();
        if self.kind != MachineKind::RbmMultiVal && !hilbert.is_spin_half() {
            return Err(bad_machine("kind", "this kind needs a spin-1/2 Hilbert space; use rbm_multi_val"));
        }
        let mut m: Box<dyn Machine<f64>> = match self.kind {
            MachineKind::RbmSpin => Box::new(RbmSpin::new(n, self.hidden(n)?)),
            MachineKind::RbmSpinSymm => {
                Box::new(RbmSpinSymm::new(graph.translation_group()?, self.alpha.unwrap_or(1))?)
            }
            MachineKind::RbmMultiVal => {
                Box::new(RbmMultiVal::new(hilbert.local_values().to_vec(), n, self.hidden(n)?)?)
            }
            MachineKind::Ffnn => Box::new(Ffnn::new(n, self.layers.as_deref().unwrap_or_default())?),
            MachineKind::Jastrow => Box::new(Jastrow::new(n)),
        };
        match &self.load {
            Some(path) => read_wf(path, &mut *m)?,
            None => m.init_random_parameters(seed, self.sigma)?,
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_discard: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_replicas: Option<usize>,
    /// Overrides the seed derived from the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Exchange moves on an unconstrained space conserve the magnetization
    /// of the initial state; this must be requested explicitly.
    #[serde(default)]
    pub allow_unconstrained_exchange: bool,
}

impl SamplerSpec {
    pub fn config(&self) -> SamplerConfig {
        let mut c = SamplerConfig::new(self.kind);
        if let Some(v) = self.n_chains {
            c.n_chains = v;
        }
        if let Some(v) = self.n_discard {
            c.n_discard = v;
        }
        c.sweep_size = self.sweep_size;
        if let Some(v) = self.n_replicas {
            c.n_replicas = v;
        }
        c
    }

    pub fn build(&self, hilbert: &HilbertSpace<f64>, graph: &Graph, master_seed: u64) -> Result<Sampler<f64>> {
        let exchange = matches!(self.kind, SamplerKind::Exchange | SamplerKind::ExchangePt);
        if exchange && !hilbert.is_constrained() && !self.allow_unconstrained_exchange {
            return Err(Error::Config {
                path: "sampler.kind".into(),
                message: "exchange moves on an unconstrained space never change the magnetization; \
                          constrain the space or set allow_unconstrained_exchange"
                    .into(),
            });
        }
        Sampler::new(self.config(), hilbert, Some(graph), self.seed.unwrap_or(chain_seed(master_seed, 1)))
    }
}

/// Target state for supervised learning or measurement generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Ground state of the configured operator.
    GroundState,
    /// Dense amplitudes in Hilbert-index order.
    Amplitudes(Vec<[f64; 2]>),
}

impl StateSpec {
    fn build(&self, op: &Operator<f64>, index: &HilbertIndex<f64>) -> Result<Vec<C<f64>>> {
        match self {
            StateSpec::GroundState => ground_state(op, index),
            StateSpec::Amplitudes(a) => {
                if a.len() != index.n_states() {
                    return Err(Error::DimensionMismatch { expected: index.n_states(), found: a.len() });
                }
                Ok(a.iter().map(|&[re, im]| cplx(re, im)).collect())
            }
        }
    }
}

fn ground_state(op: &Operator<f64>, index: &HilbertIndex<f64>) -> Result<Vec<C<f64>>> {
    let res = if index.n_states() <= MAX_FULL_ED_STATES {
        full_ed(op, true)?
    } else {
        let opts = LanczosOptions { compute_eigenvectors: true, ..LanczosOptions::default() };
        lanczos_ed(op, &opts)?
    };
    Ok(res.eigenvectors.expect("requested").swap_remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub state: StateSpec,
    pub bases: Vec<String>,
    pub n_records: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdMethod {
    Full,
    Lanczos,
    ImaginaryTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverSpec {
    Vmc {
        n_samples: usize,
        n_iter: usize,
        #[serde(default = "default_method")]
        method: Method,
        #[serde(default)]
        sr: SrConfig,
        /// Extra operators estimated every iteration, by log key.
        #[serde(default)]
        observables: BTreeMap<String, OperatorSpec>,
    },
    Supervised {
        n_iter: usize,
        batch_size: usize,
        #[serde(default = "default_loss")]
        loss: String,
        /// Dataset file; else `target` is enumerated over the space.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dataset: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<StateSpec>,
    },
    Qsr {
        n_iter: usize,
        batch_size: usize,
        #[serde(default = "default_model_samples")]
        n_samples: usize,
        /// Measurement file; else records are generated from `generate`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dataset: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generate: Option<MeasurementSpec>,
        /// Model term from the sampler instead of exact enumeration.
        #[serde(default)]
        use_sampler: bool,
        /// State the fidelity is logged against.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<StateSpec>,
    },
    Ed {
        #[serde(default = "default_ed_method")]
        method: EdMethod,
        #[serde(default = "one")]
        first_n: usize,
        #[serde(default)]
        compute_eigenvectors: bool,
        #[serde(default = "default_lanczos_iter")]
        max_iter: usize,
        #[serde(default = "default_lanczos_tol")]
        tol: f64,
        #[serde(default = "default_tau")]
        tau_max: f64,
        #[serde(default = "default_dt")]
        dt: f64,
    },
}

fn default_method() -> Method {
    Method::Sr
}
fn default_loss() -> String {
    "overlap".into()
}
fn default_model_samples() -> usize {
    1000
}
fn default_ed_method() -> EdMethod {
    EdMethod::Lanczos
}
fn default_lanczos_iter() -> usize {
    LanczosOptions::default().max_iter
}
fn default_lanczos_tol() -> f64 {
    LanczosOptions::default().tol
}
fn default_tau() -> f64 {
    20.0
}
fn default_dt() -> f64 {
    1e-3
}

impl DriverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DriverSpec::Vmc { .. } => "vmc",
            DriverSpec::Supervised { .. } => "supervised",
            DriverSpec::Qsr { .. } => "qsr",
            DriverSpec::Ed { .. } => "ed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_prefix: Option<PathBuf>,
    pub graph: GraphSpec,
    pub hilbert: HilbertSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub machine: Option<MachineSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<Rule>,
    pub driver: DriverSpec,
}

/// Parses a JSON config. Errors carry the JSON path of the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { path: if path == "." { "<root>".into() } else { path }, message: e.into_inner().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn missing(section: &str, driver: &str) -> Error {
    Error::Config { path: section.into(), message: format!("section is required by the {driver} driver") }
}

impl RunConfig {
    /// Cross-section checks that do not need the built objects.
    pub fn validate(&self) -> Result<()> {
        let d = self.driver.name();
        let need = |present: bool, section: &str| if present { Ok(()) } else { Err(missing(section, d)) };
        if let Some(m) = &self.machine {
            m.validate()?;
        }
        match &self.driver {
            DriverSpec::Vmc { .. } => {
                need(self.operator.is_some(), "operator")?;
                need(self.machine.is_some(), "machine")?;
                need(self.sampler.is_some(), "sampler")?;
                need(self.optimizer.is_some(), "optimizer")?;
            }
            DriverSpec::Supervised { dataset, target, .. } => {
                need(self.machine.is_some(), "machine")?;
                need(self.optimizer.is_some(), "optimizer")?;
                match (dataset, target) {
                    (Some(_), Some(_)) | (None, None) => {
                        return Err(Error::Config {
                            path: "driver".into(),
                            message: "give exactly one of dataset or target".into(),
                        })
                    }
                    (None, Some(StateSpec::GroundState)) => need(self.operator.is_some(), "operator")?,
                    _ => {}
                }
            }
            DriverSpec::Qsr { dataset, generate, use_sampler, reference, .. } => {
                need(self.machine.is_some(), "machine")?;
                need(self.optimizer.is_some(), "optimizer")?;
                if *use_sampler {
                    need(self.sampler.is_some(), "sampler")?;
                }
                if dataset.is_some() == generate.is_some() {
                    return Err(Error::Config {
                        path: "driver".into(),
                        message: "give exactly one of dataset or generate".into(),
                    });
                }
                let wants_gs = matches!(reference, Some(StateSpec::GroundState))
                    || matches!(generate, Some(MeasurementSpec { state: StateSpec::GroundState, .. }));
                if wants_gs {
                    need(self.operator.is_some(), "operator")?;
                }
                if let Some(g) = generate {
                    for (k, b) in g.bases.iter().enumerate() {
                        parse_bases(b).map_err(|e| Error::Config {
                            path: format!("driver.generate.bases[{k}]"),
                            message: e.to_string(),
                        })?;
                    }
                }
            }
            DriverSpec::Ed { .. } => need(self.operator.is_some(), "operator")?,
        }
        Ok(())
    }

    /// Canonical JSON with defaults filled in.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Outcome of [`run`]: a JSON summary for the CLI.
pub fn run(cfg: &RunConfig) -> Result<Value> {
    cfg.validate()?;
    let graph = cfg.graph.build()?;
    let hilbert = cfg.hilbert.build(&graph)?;
    let prefix = cfg.output_prefix.as_deref();
    let op = cfg.operator.as_ref().map(|o| o.build(&hilbert, &graph)).transpose()?;
    let machine_seed = chain_seed(cfg.seed, 0);
    let data_seed = chain_seed(cfg.seed, 2);
    let build_machine = || cfg.machine.as_ref().expect("validated").build(&hilbert, &graph, machine_seed);
    let build_optimizer = || Optimizer::new(cfg.optimizer.expect("validated"));
    let index = || -> Result<HilbertIndex<f64>> { hilbert.index() };

    match &cfg.driver {
        DriverSpec::Vmc { n_samples, n_iter, method, sr, observables } => {
            let op = op.as_ref().expect("validated");
            let mut machine = build_machine()?;
            let mut sampler = cfg.sampler.as_ref().expect("validated").build(&hilbert, &graph, cfg.seed)?;
            let mut optimizer = build_optimizer()?;
            let obs = observables
                .iter()
                .map(|(name, spec)| Ok((name.clone(), spec.build(&hilbert, &graph)?)))
                .collect::<Result<Vec<_>>>()?;
            let vcfg = VmcConfig { n_samples: *n_samples, n_iter: *n_iter, method: *method, sr: sr.clone() };
            let out = run_vmc(&vcfg, op, &mut *machine, &mut sampler, &mut optimizer, &obs, prefix)?;
            let last = out.last().map(|r| r.energy.mean);
            Ok(json!({ "driver": "vmc", "iterations": out.len(), "final_energy": last }))
        }
        DriverSpec::Supervised { n_iter, batch_size, loss, dataset, target } => {
            let mut machine = build_machine()?;
            let mut optimizer = build_optimizer()?;
            let idx = index().ok();
            let data = match (dataset, target) {
                (Some(path), _) => SupervisedDataset::read_json(path)?,
                (None, Some(t)) => {
                    let i = idx.as_ref().ok_or_else(|| Error::invalid("target needs an enumerable space"))?;
                    let psi = t.build(op.as_ref().unwrap_or(&Operator::zero(&hilbert)), i)?;
                    SupervisedDataset::from_amplitudes(i, &psi)?
                }
                (None, None) => unreachable!("validated"),
            };
            let scfg = SupervisedConfig { n_iter: *n_iter, batch_size: *batch_size, loss: loss.clone() };
            let out = run_supervised(&scfg, &mut *machine, &mut optimizer, &data, idx.as_ref(), data_seed, prefix)?;
            let last = out.last().map(|r| r.overlap.overlap);
            Ok(json!({ "driver": "supervised", "iterations": out.len(), "final_overlap": last }))
        }
        DriverSpec::Qsr { n_iter, batch_size, n_samples, dataset, generate, use_sampler, reference } => {
            let mut machine = build_machine()?;
            let mut optimizer = build_optimizer()?;
            let idx = index().ok();
            let zero = Operator::zero(&hilbert);
            let op_ref = op.as_ref().unwrap_or(&zero);
            let records = match (dataset, generate) {
                (Some(path), _) => read_records(path)?,
                (None, Some(g)) => {
                    let i = idx.as_ref().ok_or_else(|| Error::invalid("generate needs an enumerable space"))?;
                    let psi = g.state.build(op_ref, i)?;
                    let bases = g.bases.iter().map(|b| parse_bases(b)).collect::<Result<Vec<_>>>()?;
                    generate_measurements(i, &psi, &bases, g.n_records, chain_seed(cfg.seed, 3))?
                }
                (None, None) => unreachable!("validated"),
            };
            let reference = match (reference, idx.as_ref()) {
                (Some(r), Some(i)) => Some(r.build(op_ref, i)?),
                (Some(_), None) => return Err(Error::invalid("reference needs an enumerable space")),
                _ => None,
            };
            let mut sampler = if *use_sampler {
                Some(cfg.sampler.as_ref().expect("validated").build(&hilbert, &graph, cfg.seed)?)
            } else {
                None
            };
            let qcfg = QsrConfig { n_iter: *n_iter, batch_size: *batch_size, n_samples: *n_samples };
            let out = run_qsr(
                &qcfg,
                &mut *machine,
                &mut optimizer,
                &records,
                sampler.as_mut(),
                idx.as_ref(),
                reference.as_deref(),
                data_seed,
                prefix,
            )?;
            let last = out.last();
            Ok(json!({
                "driver": "qsr",
                "iterations": out.len(),
                "final_nll": last.and_then(|r| r.nll),
                "final_fidelity": last.and_then(|r| r.fidelity),
            }))
        }
        DriverSpec::Ed { method, first_n, compute_eigenvectors, max_iter, tol, tau_max, dt } => {
            let op = op.as_ref().expect("validated");
            let (eigenvalues, eigenvectors, trace) = match method {
                EdMethod::Full => {
                    let r = full_ed(op, *compute_eigenvectors)?;
                    let n = (*first_n).min(r.eigenvalues.len());
                    (r.eigenvalues[..n].to_vec(), r.eigenvectors.map(|mut v| {
                        v.truncate(n);
                        v
                    }), None)
                }
                EdMethod::Lanczos => {
                    let opts = LanczosOptions {
                        first_n: *first_n,
                        compute_eigenvectors: *compute_eigenvectors,
                        max_iter: *max_iter,
                        tol: *tol,
                        seed: cfg.seed,
                    };
                    let r = lanczos_ed(op, &opts)?;
                    (r.eigenvalues, r.eigenvectors, None)
                }
                EdMethod::ImaginaryTime => {
                    let i = index()?;
                    let psi0 = vec![cplx(1.0 / (i.n_states() as f64).sqrt(), 0.0); i.n_states()];
                    let p = imaginary_time_propagation(op, &i, &psi0, *tau_max, *dt)?;
                    let e = *p.energies.last().expect("initial energy is recorded");
                    let vecs = compute_eigenvectors.then(|| vec![p.state.clone()]);
                    (vec![e], vecs, Some(p.energies))
                }
            };
            if let Some(prefix) = prefix {
                let mut doc = json!({ "schema_version": SCHEMA_VERSION, "eigenvalues": eigenvalues });
                if let Some(v) = &eigenvectors {
                    let v: Vec<Vec<[f64; 2]>> = v.iter().map(|x| x.iter().map(|z| [z.re, z.im]).collect()).collect();
                    doc["eigenvectors"] = json!(v);
                }
                if let Some(t) = &trace {
                    doc["energy_trace"] = json!(t);
                }
                write_atomic(&with_extension(prefix, "ed"), serde_json::to_string(&doc)?.as_bytes())?;
            }
            Ok(json!({ "driver": "ed", "eigenvalues": eigenvalues }))
        }
    }
}
