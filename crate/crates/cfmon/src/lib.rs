//! Experiment driver for `cfmon-core`: TOML-configured sweeps over deployment
//! sizes, the scheme comparison (optimized vs. equal power, greedy vs. random
//! modes, cell-free vs. co-located), file outputs and the oracle suite.

use std::path::PathBuf;

pub mod config;
pub mod harness;
pub mod output;
pub mod validate;

pub use config::{ExperimentConfig, Scheme, SweepAxis};
pub use harness::{run_experiment, run_experiment_traced, summarize, ResultRow, Summary};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] cfmon_core::Error),

    #[error("csv: {0}")]
    Csv(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e.to_string())
    }
}
