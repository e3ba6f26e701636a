//! `prefix.wf`: machine kind, shape and the flat parameter vector as
//! `[re, im]` pairs. Numbers use the shortest decimal that parses back to
//! the same double, so a write/read cycle is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::machine::Machine;
use crate::scalar::{cplx, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WfFile {
    pub schema_version: u32,
    pub machine_kind: String,
    pub shape: Vec<usize>,
    pub parameters: Vec<[f64; 2]>,
}

impl WfFile {
    pub fn from_machine<T: Real, M: Machine<T> + ?Sized>(machine: &M) -> Self {
        WfFile {
            schema_version: SCHEMA_VERSION,
            machine_kind: machine.kind().to_string(),
            shape: machine.shape(),
            parameters: machine
                .parameters()
                .iter()
                .map(|p| [p.re.as_f64(), p.im.as_f64()])
                .collect(),
        }
    }

    /// Loads the parameters into `machine` after checking kind and shape.
    pub fn apply<T: Real, M: Machine<T> + ?Sized>(&self, machine: &mut M) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported .wf schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.machine_kind != machine.kind() || self.shape != machine.shape() {
            return Err(Error::invalid(format!(
                "parameter file holds {} {:?} but the machine is {} {:?}",
                self.machine_kind,
                self.shape,
                machine.kind(),
                machine.shape()
            )));
        }
        let p: Vec<_> = self.parameters.iter().map(|&[re, im]| cplx(T::of(re), T::of(im))).collect();
        machine.set_parameters(&p)
    }
}

pub fn write_wf<T: Real, M: Machine<T> + ?Sized>(path: &Path, machine: &M) -> Result<()> {
    let text = serde_json::to_string(&WfFile::from_machine(machine))?;
    write_atomic(path, text.as_bytes())
}

pub fn read_wf<T: Real, M: Machine<T> + ?Sized>(path: &Path, machine: &mut M) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: WfFile = serde_json::from_str(&text)?;
    file.apply(machine)
}
