//! `prefix.log`: one JSON object `{"schema_version", "Output": [...]}`,
//! rewritten in full after every iteration.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::{with_extension, write_atomic, SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct RunLog {
    path: PathBuf,
    /// Serialized records joined by commas.
    body: String,
    n_records: usize,
}

impl RunLog {
    /// Creates `prefix.log` holding an empty output list.
    pub fn create(prefix: &Path) -> Result<Self> {
        let log = RunLog {
            path: with_extension(prefix, "log"),
            body: String::new(),
            n_records: 0,
        };
        log.flush()?;
        Ok(log)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.n_records
    }

    pub fn is_empty(&self) -> bool {
        self.n_records == 0
    }

    pub fn push(&mut self, record: &Value) -> Result<()> {
        if !self.body.is_empty() {
            self.body.push(',');
        }
        self.body.push_str(&serde_json::to_string(record)?);
        self.n_records += 1;
        self.flush()
    }

    fn flush(&self) -> Result<()> {
        let text = format!("{{\"schema_version\":{SCHEMA_VERSION},\"Output\":[{}]}}\n", self.body);
        write_atomic(&self.path, text.as_bytes())
    }
}

/// Reads the `Output` records of a log file.
pub fn read_log(path: &Path) -> Result<Vec<Map<String, Value>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)?;
    let out = doc
        .get("Output")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid(format!("{} has no Output array", path.display())))?;
    out.iter()
        .map(|r| {
            r.as_object()
                .cloned()
                .ok_or_else(|| Error::invalid("log record is not an object"))
        })
        .collect()
}

/// `{"Mean": m, "Sigma": s, "Taucorr": t}`.
pub fn stat_value(mean: f64, sigma: f64, taucorr: f64) -> Value {
    serde_json::json!({ "Mean": mean, "Sigma": sigma, "Taucorr": taucorr })
}
