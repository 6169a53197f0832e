//! Configuration and the `run`, `sweep`, `verify` and `agent` commands.
//!
//! Every output is collected first and written once, in a fixed order, so
//! a config plus its seeds determines every byte.

mod config;
mod run;
mod sweep;
mod verify;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, SweepConfig};
pub use run::{
    cmd_agent, cmd_run, run_seeds, runs_csv, RunOptions, RunRecord, RunRow, Stat, Summary,
};
pub use sweep::{
    cmd_sweep, grid_axis, grid_csv, meta_path, oracle_cost, read_grid, sweep_grid, GridMeta,
    GridNode, GridResult,
};
pub use verify::{cmd_verify, verify_gains, VerifyReport, VerifyRow};

use crate::swarm::SwarmError;
use crate::transport::TransportError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("grid: {0}")]
    Grid(String),
    #[error("config mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Swarm(#[from] SwarmError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }
}

impl From<TransportError> for HarnessError {
    fn from(e: TransportError) -> Self {
        Self::Swarm(SwarmError::Transport(e))
    }
}

pub(crate) fn pretty_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output types always serialize");
    bytes.push(b'\n');
    bytes
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}
