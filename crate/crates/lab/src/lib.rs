//! Experiment harness for `noma-core`: configuration files, parallel Monte
//! Carlo runs, reproduction sweeps, CSV output and the invariant suite behind
//! the `noma-lab` command line.

#![warn(missing_debug_implementations, unused_qualifications)]

use std::path::PathBuf;

pub mod config;
pub mod experiments;
pub mod plots;
pub mod results;
pub mod runner;
pub mod validate;

/// Errors surfaced by the harness, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Model(#[from] noma_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{failed} of {total} invariant checks failed")]
    Validation { failed: usize, total: usize },
}

impl LabError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        LabError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// 2 for configuration problems, 3 for infeasible geometry, 4 for failed
    /// validation and 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Parse(_) | LabError::UnknownKeys(_) | LabError::Config { .. } => 2,
            LabError::Model(noma_core::Error::InfeasibleGeometry { .. } | noma_core::Error::NoFeasibleMode) => 3,
            LabError::Validation { .. } => 4,
            LabError::Model(_) | LabError::Io { .. } | LabError::Csv(_) => 1,
        }
    }
}
