use serde::{Deserialize, Serialize};

use super::activation::ActivationKind;
use super::dense::{dense_backward, dense_forward, DenseCache};
use super::gru::{gru_step, gru_step_backward, GruCache};
use super::loss::mse_loss;
use super::lstm::{lstm_step, lstm_step_backward, LstmCache};
use super::params::{Gradient, ParamSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Dense,
    Lstm,
    Gru,
}

/// One layer: its kind, width and activation. For recurrent layers the
/// activation is the candidate/output nonlinearity; gates are always sigmoid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub width: usize,
    pub activation: ActivationKind,
}

impl LayerSpec {
    pub fn new(kind: LayerKind, width: usize, activation: ActivationKind) -> Self {
        Self {
            kind,
            width,
            activation,
        }
    }

    pub fn output() -> Self {
        Self::new(LayerKind::Dense, 1, ActivationKind::Identity)
    }
}

/// Ordered layers ending in a single `Dense(1, identity)` regression output.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(input_width: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = Self { input_width, layers };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 {
            return Err(Error::InvalidNetwork("input width must be positive".into()));
        }
        if let Some(l) = self.layers.iter().position(|l| l.width == 0) {
            return Err(Error::InvalidNetwork(format!("layer {l} has zero width")));
        }
        match self.layers.last() {
            Some(last) if *last == LayerSpec::output() => Ok(()),
            _ => Err(Error::InvalidNetwork(
                "the last layer must be the Dense(1, identity) output".into(),
            )),
        }
    }

    pub fn param_count(&self) -> usize {
        let mut input = self.input_width;
        let mut total = 0;
        for l in &self.layers {
            let gates = match l.kind {
                LayerKind::Dense => 1,
                LayerKind::Lstm => 4,
                LayerKind::Gru => 3,
            };
            let cols = match l.kind {
                LayerKind::Dense => input,
                _ => input + l.width,
            };
            total += gates * (l.width * cols + l.width);
            input = l.width;
        }
        total
    }

    pub fn is_recurrent(&self) -> bool {
        self.layers.iter().any(|l| l.kind != LayerKind::Dense)
    }
}

/// Recurrent state of one layer. `cell` is empty for GRU layers.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl CellState {
    pub fn zeros(width: usize, with_cell: bool) -> Self {
        Self {
            hidden: vec![0.0; width],
            cell: if with_cell { vec![0.0; width] } else { Vec::new() },
        }
    }
}

/// Input sequence with one scalar target per step.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceBatch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

#[derive(Clone, Debug)]
enum LayerTrace {
    Dense(Vec<DenseCache>),
    Lstm(Vec<LstmCache>),
    Gru(Vec<GruCache>),
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub outputs: Vec<f64>,
    layers: Vec<LayerTrace>,
}

/// Runs the network over a sequence from a zero initial state. Layers are
/// evaluated one after another over the whole sequence.
pub fn forward(params: &ParamSet, inputs: &[Vec<f64>]) -> Result<ForwardTrace> {
    let n_layers = params.spec().layers.len();
    let mut seq: Vec<Vec<f64>> = inputs.to_vec();
    let mut traces = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let p = params.layer(l);
        let width = p.width();
        let mut out = Vec::with_capacity(seq.len());
        let trace = match p.block.spec.kind {
            super::LayerKind::Dense => {
                let mut caches = Vec::with_capacity(seq.len());
                for x in &seq {
                    let (y, c) = dense_forward(&p, x)?;
                    out.push(y);
                    caches.push(c);
                }
                LayerTrace::Dense(caches)
            }
            super::LayerKind::Lstm => {
                let mut state = CellState::zeros(width, true);
                let mut caches = Vec::with_capacity(seq.len());
                for x in &seq {
                    let (next, c) = lstm_step(&p, x, &state)?;
                    out.push(next.hidden.clone());
                    caches.push(c);
                    state = next;
                }
                LayerTrace::Lstm(caches)
            }
            super::LayerKind::Gru => {
                let mut state = CellState::zeros(width, false);
                let mut caches = Vec::with_capacity(seq.len());
                for x in &seq {
                    let (next, c) = gru_step(&p, x, &state)?;
                    out.push(next.hidden.clone());
                    caches.push(c);
                    state = next;
                }
                LayerTrace::Gru(caches)
            }
        };
        traces.push(trace);
        seq = out;
    }
    Ok(ForwardTrace {
        outputs: seq.into_iter().map(|y| y[0]).collect(),
        layers: traces,
    })
}

/// Full backpropagation through time from per-step ∂L/∂output.
pub fn backward(params: &ParamSet, trace: &ForwardTrace, d_outputs: &[f64]) -> Result<Gradient> {
    if d_outputs.len() != trace.outputs.len() {
        return Err(Error::LengthMismatch {
            left: d_outputs.len(),
            right: trace.outputs.len(),
        });
    }
    let mut grad = params.zero_gradient();
    let mut upstream: Vec<Vec<f64>> = d_outputs.iter().map(|&d| vec![d]).collect();
    for (l, layer_trace) in trace.layers.iter().enumerate().rev() {
        let p = params.layer(l);
        let width = p.width();
        let g = grad.layer_mut(l);
        let mut dxs = vec![Vec::new(); upstream.len()];
        match layer_trace {
            LayerTrace::Dense(caches) => {
                for (t, cache) in caches.iter().enumerate() {
                    dxs[t] = dense_backward(&p, cache, &upstream[t], g);
                }
            }
            LayerTrace::Lstm(caches) => {
                let mut dh_next = vec![0.0; width];
                let mut dc_next = vec![0.0; width];
                for (t, cache) in caches.iter().enumerate().rev() {
                    let dh: Vec<f64> = upstream[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                    let (dx, dh_prev, dc_prev) = lstm_step_backward(&p, cache, &dh, &dc_next, g);
                    dxs[t] = dx;
                    dh_next = dh_prev;
                    dc_next = dc_prev;
                }
            }
            LayerTrace::Gru(caches) => {
                let mut dh_next = vec![0.0; width];
                for (t, cache) in caches.iter().enumerate().rev() {
                    let dh: Vec<f64> = upstream[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                    let (dx, dh_prev) = gru_step_backward(&p, cache, &dh, g);
                    dxs[t] = dx;
                    dh_next = dh_prev;
                }
            }
        }
        upstream = dxs;
    }
    Ok(grad)
}

/// MSE of the network output against `batch.targets`, its gradient, and the
/// outputs themselves.
pub fn loss_and_gradient(params: &ParamSet, batch: &SequenceBatch) -> Result<(f64, Gradient, Vec<f64>)> {
    let trace = forward(params, &batch.inputs)?;
    let (loss, d_out) = mse_loss(&trace.outputs, &batch.targets)?;
    let grad = backward(params, &trace, &d_out)?;
    Ok((loss, grad, trace.outputs))
}
