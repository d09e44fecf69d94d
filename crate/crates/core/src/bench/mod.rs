//! Benchmark harness: batches of forest trials, CSV reports, the frustum
//! subsampling study and SVG plots derived from the CSV output.

mod plot;
mod report;
mod runner;
mod subsample;
mod svg;

pub use plot::{plot_report, PlotSummary};
pub use report::{
    aggregate, paired_path_lengths, read_aggregate_csv, read_cycles_csv, read_overlay_csv,
    read_trials_csv, wilson_interval, write_long_report, AggregateRow, CycleRow, OverlayLayer,
    OverlayRow, PairedLengths, TrialRow, TIMING_COLUMNS,
};
pub use runner::{run_benchmark, run_long_benchmark, BenchmarkRun, BenchmarkSpec};
pub use subsample::{
    run_subsampling_study, FractionSummary, SubsampleRow, SubsampleSpec, SubsampleStudy,
};

use thiserror::Error;

use crate::sim::SimError;

/// Version written in the first column of every CSV file.
pub const SCHEMA_VERSION: u32 = 1;

pub const TRIALS_CSV: &str = "trials.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const CYCLES_CSV: &str = "cycles.csv";
pub const OVERLAY_CSV: &str = "overlay.csv";
pub const LONG_REPORT: &str = "long_report.md";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}: unsupported schema version {1}")]
    Schema(String, u32),
}

impl BenchError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
