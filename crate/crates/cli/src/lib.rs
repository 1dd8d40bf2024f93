//! Experiment runner for the internal-exchange market making model: configuration, artifact
//! layout and the `solve`, `figures`, `tables` and `sweep` commands.

pub mod artifacts;
pub mod commands;
pub mod config;

use std::io;
use std::path::PathBuf;

use internex_core::ModelError;
use thiserror::Error;

pub use commands::{
    boundary_curve, cmd_figures, cmd_solve, cmd_sweep, cmd_tables, sweep_results, table_results, BoundaryPoint,
    SweepResults, TableCell,
};
pub use config::{ExperimentConfig, SolverConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid run: {0}")]
    InvalidRun(String),

    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::InvalidRun(_) => 4,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParams(_) | ModelError::UnknownSize(_) | ModelError::Unstable { .. } => {
                CliError::Config(e.to_string())
            }
            ModelError::OffGrid { .. } | ModelError::NoLiquidity | ModelError::NumericalFailure { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}
