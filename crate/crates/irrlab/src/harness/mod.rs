//! Experiment orchestration: interaction templates, summary statistics,
//! baseline/simulated/comparison runs and their on-disk reports.

pub mod experiments;
pub mod report;
pub mod stats;
pub mod template;

pub use experiments::{
    run_baseline, run_comparison, run_simulated, ComparisonConfig, ComparisonReport,
    ComparisonRow, ExperimentConfig, RunArtifacts,
};
pub use report::ExperimentStats;
pub use stats::{summarize, SummaryStats};
pub use template::{generate_template, load_template};

use thiserror::Error;

use crate::lmt::LmtError;
use crate::testbed::TestbedError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("template line {line}: expected 'a' or 'd', got {content:?}")]
    TemplateLine { line: usize, content: String },
    #[error("template contains no interactions")]
    EmptyTemplate,
    #[error("cannot generate a template of zero interactions")]
    ZeroCount,
    #[error("need at least 2 measurements to summarize, got {0}")]
    TooFewMeasurements(usize),
    #[error("session failed: {0}")]
    Session(#[from] TestbedError),
    #[error("observer tool failed: {0}")]
    Lmt(#[from] LmtError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
