//! Experiment plumbing: configs, batch runs over oracles × points ×
//! samplers × repetitions, and CSV output.

mod config;
mod csv;
mod experiment;
mod points;

use thiserror::Error;

pub use config::{AttackSection, ExperimentConfig, ExperimentSection, PointSource, PointsSection};
pub use csv::{emit_trace_csv, summary_to_csv, trace_to_csv, write_summary_csv, TRACE_HEADER};
pub use experiment::{run_experiment, run_seed, ExperimentReport, RunRecord, Statistic, SummaryRow};
pub use points::{parse_points, read_points, write_points};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("config error at `{key}`: {message}")]
    InvalidKey { key: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Attack(#[from] crate::attack::AttackError),
}

impl HarnessError {
    /// Whether the error stems from the user's configuration rather than
    /// from running it.
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::InvalidKey { .. })
    }
}

pub(crate) fn invalid(key: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::InvalidKey {
        key: key.into(),
        message: message.into(),
    }
}
