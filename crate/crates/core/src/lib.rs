//! In-situ thermal transmittance (U-value) estimation from heat flux method
//! measurements, with small recurrent networks that predict the heat flux from
//! interior and exterior air temperatures alone.
//!
//! The crate is organised bottom-up:
//!
//! - [`series`]: measurement series, the canonical CSV format, chronological splits.
//! - [`iso9869`]: average-method U-value, running trace, stability check, error metrics.
//! - [`nn`]: a hand-differentiated network engine (dense, LSTM and GRU layers,
//!   MSE loss, SGD/Adam, finite-difference gradient checker).
//! - [`architectures`]: the MLP/LSTM/GRU/LSTM+GRU networks, normalisation,
//!   training, prediction and predicted U-values.
//! - [`synth`]: a lumped RC wall simulator producing synthetic series with a
//!   known U-value.
//! - [`experiment`]: the architecture × split grid, reports, extrapolation
//!   detection and plot-data export.

pub mod architectures;
mod accum;
pub mod error;
pub mod experiment;
pub mod iso9869;
pub mod nn;
pub mod series;
pub mod synth;

pub use accum::CompensatedSum;
pub use architectures::{Architecture, Normalizer, TrainConfig, TrainingRun};
pub use error::{Error, Result};
pub use iso9869::{MetricSet, UValueEstimate};
pub use nn::{ActivationKind, Gradient, LayerKind, LayerSpec, NetworkSpec, ParamSet};
pub use series::{MeasurementSeries, Sample, SplitSpec};
pub use synth::{BoundaryScenario, WallSpec};
