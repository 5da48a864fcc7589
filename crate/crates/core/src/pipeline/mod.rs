//! Windowed orchestration: classify → group → label → update → store, and
//! the static-versus-adaptive benchmark.

mod config;
mod events;
mod report;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::PipelineConfig;
pub use events::{compare_events, detect_events, same_event, DetectedEvent, EventComparison, Grouping, LocatedPost};
pub use report::{bench_csv, bench_summary, events_geojson, run_csv, BENCH_CSV_HEADER, RUN_CSV_HEADER};
pub use run::{
    bench, bench_on, classify_window, run_windowed, update_store, Arm, BenchReport, BenchRow, RunOutcome, StreamData,
    WindowPredictions, WindowReport,
};

use crate::ensemble::EnsembleError;
use crate::features::FeatureError;
use crate::ingest::IngestError;
use crate::labeler::LabelError;
use crate::learners::LearnError;
use crate::registry::RegistryError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("bootstrap error: {0}")]
    Bootstrap(String),
    #[error("bench arms consumed different streams")]
    StreamMismatch,
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl PipelineError {
    /// Configuration problems are the caller's to fix; everything else is
    /// a problem with the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}
