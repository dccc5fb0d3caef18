//! Reading and writing instances and schedules.

mod json;
mod psplib;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{validate_instance, Instance, ValidationReport};

pub use json::{parse_json, parse_schedule_json, write_json, write_schedule_json};
pub use psplib::{parse_psplib, PsplibOptions};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at {path}: {msg}")]
    Json { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Psplib { line: usize, msg: String },
    #[error("missing section '{0}'")]
    MissingSection(&'static str),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
}

/// Loads `.sm` files as PSPLib and anything else as JSON, then validates.
pub fn read_instance(path: &Path, opts: &PsplibOptions) -> Result<Instance, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })?;
    let inst = match path.extension().and_then(|e| e.to_str()) {
        Some("sm") => parse_psplib(&text, opts)?,
        _ => parse_json(&text)?,
    };
    let report = validate_instance(&inst);
    if report.is_valid() {
        Ok(inst)
    } else {
        Err(IoError::Invalid(report))
    }
}
