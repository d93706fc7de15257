use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::architectures::TrainConfig;
use crate::error::{Error, Result};

/// Settings shared by every grid cell.
///
/// ```toml
/// workers = 4
///
/// [training]
/// max_epochs = 5000
/// patience = 100
/// min_improvement = 1e-6
/// cell_activation = "relu"
///
/// [training.optimizer]
/// kind = "adam"
/// learning_rate = 0.003
///
/// [extrapolation]
/// margin = 0.0
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub training: TrainConfig,
    pub extrapolation: ExtrapolationConfig,
    /// Concurrent grid cells; 0 uses one per available core.
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtrapolationConfig {
    /// Allowed excursion beyond the training range, in normalised units
    /// (training standard deviations). `inf` disables detection.
    pub margin: f64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self { margin: 0.0 }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            training: TrainConfig::default(),
            extrapolation: ExtrapolationConfig::default(),
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub const SYNTHETIC_PRESET: &'static str = include_str!("../../presets/grid.toml");

    /// Settings used for grids on the synthetic walls (tanh cells).
    pub fn synthetic_preset() -> Self {
        Self::from_toml(Self::SYNTHETIC_PRESET).expect("bundled preset is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.training;
        let lr = t.optimizer.learning_rate();
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        if t.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be positive".into()));
        }
        if !(t.min_improvement >= 0.0) {
            return Err(Error::Config("min_improvement must be non-negative".into()));
        }
        if !(self.extrapolation.margin >= 0.0) {
            return Err(Error::Config("extrapolation margin must be non-negative".into()));
        }
        Ok(())
    }
}
