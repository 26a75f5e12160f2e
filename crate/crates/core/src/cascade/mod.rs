//! Exit-threshold calibration, early-exit inference with difficulty tags,
//! and mean inference time accounting.

mod calibrate;
mod grid;
mod infer;
mod table;
mod timing;

pub use calibrate::{
    baseline_feasible, calibrate_baseline, calibrate_incremental, candidates, incremental_feasible,
    zero_error_threshold, CalibrationRecord, Candidate, ClassThreshold,
};
pub use grid::{confidence_grid_search, GridCell, GridResult};
pub use infer::{
    cascade_infer, evaluate_cascade, CascadeOptions, CascadeOutput, CascadeStats, Difficulty, StagePredictions,
    StageVote, TimingConfig, TimingMode,
};
pub use table::{Rule, StageThresholds, ThresholdTable};
pub use timing::{ablation_mean_time, mean_time, TimingReport};

use crate::datasets::DatasetError;
use crate::models::ModelError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum CascadeError {
    #[error("confidence must lie in (0, 1], got {0}")]
    InvalidConfidence(f64),
    #[error("pass rates must be non-negative with a sum of at most 1, got {0} and {1}")]
    InvalidRates(f64, f64),
    #[error("stage times must be positive and finite")]
    InvalidTime,
    #[error("the confidence grid is empty")]
    EmptyGrid,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("sample does not match the bundle: {0}")]
    VariantMismatch(String),
    #[error("bad threshold table: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Nn(#[from] NnError),
}
