//! Configuration, seeded parallel execution, scaling fits, trace emission and
//! invariant verification.

mod config;
mod emit;
mod runner;
mod scaling;
mod verify;

pub use config::{parse_seeds, Algorithm, NetSpec, RunConfig};
pub use emit::{
    csv_rows, emit, load_traces, plot_points, read_csv, read_json_lines, write_csv,
    write_json_lines, write_plotdata, write_scaling, CsvRow, Format, PlotPoint,
};
pub use runner::{build_net, run, run_grid, Prepared};
pub use scaling::{scaling_fit, scaling_fit_traces, ScalingReport, ScalingRow};
pub use verify::{verify, Check, VerifyReport};

use thiserror::Error;

use crate::reduction::ReductionError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("run with seed {seed} failed: {source}")]
    Run {
        seed: u64,
        #[source]
        source: ReductionError,
    },
    #[error("insufficient scaling grid: {0}")]
    InsufficientGrid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        HarnessError::ConfigInvalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::ConfigInvalid { .. } | HarnessError::InsufficientGrid(_))
    }
}
