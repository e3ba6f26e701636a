//! Run configuration, JSON logs and parameter files.

pub mod config;
pub mod log;
pub mod wf;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Version of the `.log` and `.wf` layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// `prefix` with `ext` appended (`out` + `log` gives `out.log`).
pub fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
