//! The four study networks, data normalisation, training and prediction.
//!
//! Every network maps the per-step input `(T_i, T_e)` to the heat flux `q`.
//! Measured heat flux is only ever a training target, never an input, so a
//! trained model can keep predicting after the flux sensor is moved.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::iso9869::{u_value_from, UValueEstimate, DEFAULT_MIN_DELTA_T_SUM};
use crate::nn::params::ParamFile;
use crate::nn::{
    forward, loss_and_gradient, ActivationKind, LayerKind, LayerSpec, NetworkSpec, Optimizer, OptimizerConfig,
    ParamSet, SequenceBatch,
};
use crate::series::{split, MeasurementSeries, SplitSpec};

pub const CHECKPOINT_FORMAT: &str = "hfm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A network family with its size. The study's four networks are
/// `MLP3`, `LSTM100`, `GRU100` and `LSTMGRU100`; other sizes follow the same
/// naming (`LSTMGRU16` is LSTM(8) followed by GRU(8)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    /// One dense ReLU hidden layer.
    Mlp(usize),
    Lstm(usize),
    Gru(usize),
    /// LSTM(n/2) followed by GRU(n/2).
    LstmGru(usize),
}

impl Architecture {
    pub const MLP3: Architecture = Architecture::Mlp(3);
    pub const LSTM100: Architecture = Architecture::Lstm(100);
    pub const GRU100: Architecture = Architecture::Gru(100);
    pub const LSTMGRU100: Architecture = Architecture::LstmGru(100);

    pub fn study_set() -> [Architecture; 4] {
        [Self::MLP3, Self::LSTM100, Self::GRU100, Self::LSTMGRU100]
    }

    /// Layer stack ending in the `Dense(1, identity)` output. `cell_activation`
    /// applies to recurrent candidate/output nonlinearities.
    pub fn network(&self, cell_activation: ActivationKind) -> NetworkSpec {
        let hidden = match *self {
            Architecture::Mlp(n) => vec![LayerSpec::new(LayerKind::Dense, n, ActivationKind::Relu)],
            Architecture::Lstm(n) => vec![LayerSpec::new(LayerKind::Lstm, n, cell_activation)],
            Architecture::Gru(n) => vec![LayerSpec::new(LayerKind::Gru, n, cell_activation)],
            Architecture::LstmGru(n) => vec![
                LayerSpec::new(LayerKind::Lstm, n / 2, cell_activation),
                LayerSpec::new(LayerKind::Gru, n / 2, cell_activation),
            ],
        };
        let mut layers = hidden;
        layers.push(LayerSpec::output());
        NetworkSpec::new(2, layers).expect("architecture layers are valid")
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Mlp(n) => write!(f, "MLP{n}"),
            Architecture::Lstm(n) => write!(f, "LSTM{n}"),
            Architecture::Gru(n) => write!(f, "GRU{n}"),
            Architecture::LstmGru(n) => write!(f, "LSTMGRU{n}"),
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownArchitecture(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let split_at = lower.find(|c: char| c.is_ascii_digit()).ok_or_else(unknown)?;
        let (family, size) = lower.split_at(split_at);
        let n: usize = size.parse().map_err(|_| unknown())?;
        if n == 0 {
            return Err(unknown());
        }
        match family {
            "mlp" => Ok(Architecture::Mlp(n)),
            "lstm" => Ok(Architecture::Lstm(n)),
            "gru" => Ok(Architecture::Gru(n)),
            "lstmgru" if n % 2 == 0 => Ok(Architecture::LstmGru(n)),
            _ => Err(unknown()),
        }
    }
}

impl Serialize for Architecture {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Architecture {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Network for a named architecture with the default ReLU cell activation.
pub fn build(name: &str) -> Result<NetworkSpec> {
    Ok(name.parse::<Architecture>()?.network(ActivationKind::Relu))
}

/// Channel order used by [`Normalizer`].
pub const CHANNELS: [&str; 3] = ["t_internal", "t_external", "heat_flux"];

/// Per-channel z-score statistics fitted on a training segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Normalizer {
    pub fn fit(train: &MeasurementSeries) -> Result<Self> {
        let columns = [train.t_internal(), train.t_external(), train.heat_flux()];
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        for (c, col) in columns.iter().enumerate() {
            let n = col.len() as f64;
            let m = col.iter().copied().collect::<CompensatedSum>().value() / n;
            let var = col.iter().map(|x| (x - m) * (x - m)).collect::<CompensatedSum>().value() / n;
            if !(var > 0.0) {
                return Err(Error::ConstantChannel(CHANNELS[c]));
            }
            mean[c] = m;
            std[c] = var.sqrt();
        }
        Ok(Self { mean, std })
    }

    #[inline]
    pub fn apply(&self, channel: usize, x: f64) -> f64 {
        (x - self.mean[channel]) / self.std[channel]
    }

    #[inline]
    pub fn invert(&self, channel: usize, z: f64) -> f64 {
        z * self.std[channel] + self.mean[channel]
    }

    /// Normalised `(T_i, T_e)` per step.
    pub fn inputs(&self, series: &MeasurementSeries) -> Vec<Vec<f64>> {
        series
            .samples()
            .iter()
            .map(|s| vec![self.apply(0, s.t_internal), self.apply(1, s.t_external)])
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub max_epochs: usize,
    /// Stop after this many epochs without a significant improvement.
    pub patience: usize,
    /// Improvement of the best loss (normalised units) that resets patience.
    pub min_improvement: f64,
    /// Candidate/output activation of recurrent cells.
    pub cell_activation: ActivationKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            max_epochs: 5000,
            patience: 100,
            min_improvement: 1e-6,
            cell_activation: ActivationKind::Relu,
        }
    }
}

/// Raw range of one input channel over the training segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub min: f64,
    pub max: f64,
}

/// A trained network with everything needed to reproduce its predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRun {
    pub spec: NetworkSpec,
    pub split: SplitSpec,
    pub seed: u64,
    pub config: TrainConfig,
    /// Training MSE (normalised) evaluated at the start of every epoch.
    pub epoch_losses: Vec<f64>,
    /// Epoch whose parameters were kept (lowest loss).
    pub best_epoch: usize,
    pub params: ParamSet,
    pub normalizer: Normalizer,
    /// Raw `(T_i, T_e)` ranges seen during training.
    pub input_range: [ChannelRange; 2],
    pub train_len: usize,
}

impl TrainingRun {
    pub fn best_loss(&self) -> f64 {
        self.epoch_losses[self.best_epoch]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CheckpointFile::from(self)).expect("checkpoints serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text).map_err(|e| Error::format("<checkpoint>", e))?;
        file.into_run().map_err(|m| Error::format("<checkpoint>", m))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format { message, .. } => Error::format(path, message),
            other => other,
        })
    }
}

/// Checkpoint file: the run's configuration echo, loss trace, normaliser and
/// the embedded parameter file (see [`ParamSet::to_json`]).
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    split: SplitSpec,
    seed: u64,
    config: TrainConfig,
    train_len: usize,
    best_epoch: usize,
    epoch_losses: Vec<f64>,
    normalizer: Normalizer,
    input_range: [ChannelRange; 2],
    params: ParamFile,
}

impl From<&TrainingRun> for CheckpointFile {
    fn from(run: &TrainingRun) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            split: run.split,
            seed: run.seed,
            config: run.config,
            train_len: run.train_len,
            best_epoch: run.best_epoch,
            epoch_losses: run.epoch_losses.clone(),
            normalizer: run.normalizer,
            input_range: run.input_range,
            params: ParamFile::from(&run.params),
        }
    }
}

impl CheckpointFile {
    fn into_run(self) -> std::result::Result<TrainingRun, String> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(format!(
                "expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, found {} v{}",
                self.format, self.version
            ));
        }
        if self.best_epoch >= self.epoch_losses.len() {
            return Err("best epoch outside the loss trace".to_string());
        }
        let params = self.params.into_params()?;
        Ok(TrainingRun {
            spec: params.spec().clone(),
            split: self.split,
            seed: self.seed,
            config: self.config,
            epoch_losses: self.epoch_losses,
            best_epoch: self.best_epoch,
            params,
            normalizer: self.normalizer,
            input_range: self.input_range,
            train_len: self.train_len,
        })
    }
}

/// Full-batch training on the chronological training segment.
///
/// Inputs are normalised `(T_i, T_e)`, the target is normalised `q`, and the
/// loss is the MSE over every training step with full backpropagation through
/// time. Training stops at `max_epochs`, or once `patience` epochs pass without
/// the best loss improving by `min_improvement`. The parameters with the
/// lowest loss are kept. Validation samples are never read.
pub fn train(
    spec: &NetworkSpec,
    series: &MeasurementSeries,
    split_spec: SplitSpec,
    seed: u64,
    config: &TrainConfig,
) -> Result<TrainingRun> {
    let (train_seg, _) = split(series, split_spec)?;
    if train_seg.len() <= 2 {
        return Err(Error::SplitTooSmall {
            train: train_seg.len(),
            validation: series.len() - train_seg.len(),
        });
    }
    if config.max_epochs == 0 {
        return Err(Error::Config("max_epochs must be positive".into()));
    }
    let normalizer = Normalizer::fit(&train_seg)?;
    let batch = SequenceBatch {
        inputs: normalizer.inputs(&train_seg),
        targets: train_seg.samples().iter().map(|s| normalizer.apply(2, s.heat_flux)).collect(),
    };
    let range = |values: Vec<f64>| ChannelRange {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let input_range = [range(train_seg.t_internal()), range(train_seg.t_external())];

    let mut params = ParamSet::init(spec, seed)?;
    let mut optimizer = Optimizer::new(config.optimizer);
    let mut losses = Vec::new();
    let mut best_params = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut reference = f64::INFINITY;
    let mut last_significant = 0;

    for epoch in 0..config.max_epochs {
        let (loss, grad, _) = loss_and_gradient(&params, &batch)?;
        if !loss.is_finite() || grad.values().iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergedLoss { epoch });
        }
        losses.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best_epoch = epoch;
            best_params.values_mut().copy_from_slice(params.values());
        }
        if reference - loss >= config.min_improvement {
            reference = loss;
            last_significant = epoch;
        }
        if epoch - last_significant >= config.patience {
            log::debug!("early stop at epoch {epoch}, best {best_loss:.3e} at {best_epoch}");
            break;
        }
        optimizer.step(&mut params, &grad)?;
    }

    Ok(TrainingRun {
        spec: spec.clone(),
        split: split_spec,
        seed,
        config: *config,
        epoch_losses: losses,
        best_epoch,
        params: best_params,
        normalizer,
        input_range,
        train_len: train_seg.len(),
    })
}

/// Predicted heat flux (W/m²) over the whole series, run chronologically from
/// a zero recurrent state at the first sample.
pub fn predict(run: &TrainingRun, series: &MeasurementSeries) -> Result<Vec<f64>> {
    let inputs = run.normalizer.inputs(series);
    let out = forward(&run.params, &inputs)?.outputs;
    Ok(out.into_iter().map(|z| run.normalizer.invert(2, z)).collect())
}

/// Average-method U computed from predicted flux and measured temperatures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedU {
    /// Over the validation segment.
    pub validation: UValueEstimate,
    /// Over the whole series.
    pub full: UValueEstimate,
}

pub fn predicted_u_value(run: &TrainingRun, series: &MeasurementSeries, split_spec: SplitSpec) -> Result<PredictedU> {
    let predictions = predict(run, series)?;
    predicted_u_from(&predictions, series, split_spec)
}

/// [`predicted_u_value`] for predictions already computed over `series`.
pub fn predicted_u_from(predictions: &[f64], series: &MeasurementSeries, split_spec: SplitSpec) -> Result<PredictedU> {
    if predictions.len() != series.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: series.len(),
        });
    }
    let boundary = split_spec.check(series.len())?;
    let delta_t: Vec<f64> = series.samples().iter().map(|s| s.delta_t()).collect();
    Ok(PredictedU {
        validation: u_value_from(&predictions[boundary..], &delta_t[boundary..], DEFAULT_MIN_DELTA_T_SUM)?,
        full: u_value_from(predictions, &delta_t, DEFAULT_MIN_DELTA_T_SUM)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for (name, arch) in [
            ("mlp3", Architecture::MLP3),
            ("LSTM100", Architecture::LSTM100),
            ("gru100", Architecture::GRU100),
            ("LstmGru100", Architecture::LSTMGRU100),
            ("lstm16", Architecture::Lstm(16)),
        ] {
            let parsed: Architecture = name.parse().unwrap();
            assert_eq!(parsed, arch);
            assert_eq!(parsed.to_string().parse::<Architecture>().unwrap(), arch);
        }
        for bad in ["cnn3", "lstm", "lstmgru15", "gru0", "mlp-3"] {
            assert!(matches!(bad.parse::<Architecture>(), Err(Error::UnknownArchitecture(_))), "{bad}");
        }
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(build("MLP3").unwrap().param_count(), 13);
        assert_eq!(build("LSTM100").unwrap().param_count(), 4 * (100 * (100 + 2) + 100) + 101);
        assert_eq!(build("GRU100").unwrap().param_count(), 3 * (100 * (100 + 2) + 100) + 101);
        let widths: Vec<usize> = build("LSTMGRU100").unwrap().layers.iter().map(|l| l.width).collect();
        assert_eq!(widths, vec![50, 50, 1]);
        let kinds: Vec<LayerKind> = build("LSTMGRU100").unwrap().layers.iter().map(|l| l.kind).collect();
        assert_eq!(kinds, vec![LayerKind::Lstm, LayerKind::Gru, LayerKind::Dense]);
    }

    #[test]
    fn config_defaults_from_partial_toml() {
        let c: TrainConfig = toml::from_str("max_epochs = 20\ncell_activation = \"tanh\"").unwrap();
        assert_eq!(c.max_epochs, 20);
        assert_eq!(c.patience, 100);
        assert_eq!(c.cell_activation, ActivationKind::Tanh);
        assert!(toml::from_str::<TrainConfig>("epochs = 3").is_err());
    }

    proptest::proptest! {
        #[test]
        fn normalizer_round_trip(
            mean in -1e3f64..1e3,
            std in 1e-3f64..1e3,
            x in -1e4f64..1e4,
            channel in 0usize..3,
        ) {
            let n = Normalizer { mean: [mean; 3], std: [std; 3] };
            let back = n.invert(channel, n.apply(channel, x));
            proptest::prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(mean.abs()).max(1.0));
        }
    }
}
