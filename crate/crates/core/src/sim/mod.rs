//! Forest worlds, simulated depth sensing and the receding-horizon trial
//! loop used by the benchmarks.

mod ground_truth;
mod sensor;
mod trial;
mod world;

pub use ground_truth::{ground_truth_esdf, DistanceGrid};
pub use sensor::simulate_sensor;
pub use trial::{
    run_trial, write_transcript, CycleRecord, PhaseTimings, SelectionLog, TrialConfig,
    TrialOutcome, TrialResult, TrialStatus,
};
pub use world::{
    generate_forest, Cylinder, ForestSpec, WorldModel, MAX_CYLINDER_RADIUS, MIN_CYLINDER_RADIUS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sensor position {0:?} is outside the world")]
    OutsideWorld([f64; 3]),
    #[error(transparent)]
    Map(#[from] crate::voxel_map::MapError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
