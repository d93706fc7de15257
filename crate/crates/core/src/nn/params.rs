use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{LayerKind, LayerSpec, NetworkSpec};
use crate::error::{Error, Result};

/// Initial bias of the LSTM forget gate.
pub const LSTM_FORGET_BIAS: f64 = 1.0;

pub const PARAMS_FORMAT: &str = "hfm-params";
pub const PARAMS_VERSION: u32 = 1;

/// One named tensor inside the flat parameter array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSlot {
    pub layer: usize,
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl TensorSlot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Contiguous parameter block of one layer. Within the block each gate stores
/// its weight matrix (`width × cols`, row-major) followed by its bias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerBlock {
    pub spec: LayerSpec,
    pub input: usize,
    pub offset: usize,
    pub len: usize,
}

impl LayerBlock {
    fn new(spec: LayerSpec, input: usize, offset: usize) -> Self {
        let mut block = Self {
            spec,
            input,
            offset,
            len: 0,
        };
        block.len = block.gate_names().len() * block.gate_stride();
        block
    }

    pub fn gate_names(&self) -> &'static [&'static str] {
        match self.spec.kind {
            LayerKind::Dense => &[""],
            LayerKind::Lstm => &["f", "i", "c", "o"],
            LayerKind::Gru => &["r", "z", "h"],
        }
    }

    /// Columns of every gate matrix: fan-in, plus the hidden width for
    /// recurrent layers which act on `[h_{t-1}, x_t]`.
    pub fn cols(&self) -> usize {
        match self.spec.kind {
            LayerKind::Dense => self.input,
            LayerKind::Lstm | LayerKind::Gru => self.spec.width + self.input,
        }
    }

    fn gate_stride(&self) -> usize {
        self.spec.width * self.cols() + self.spec.width
    }

    /// Weight and bias ranges of gate `g`, relative to the block start.
    pub fn gate_ranges(&self, g: usize) -> (Range<usize>, Range<usize>) {
        let start = g * self.gate_stride();
        let w_end = start + self.spec.width * self.cols();
        (start..w_end, w_end..w_end + self.spec.width)
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Deterministic mapping from a [`NetworkSpec`] to flat parameter offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    spec: NetworkSpec,
    layers: Vec<LayerBlock>,
    tensors: Vec<TensorSlot>,
    len: usize,
}

impl Layout {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut tensors = Vec::new();
        let mut offset = 0;
        let mut input = spec.input_width;
        for (l, layer) in spec.layers.iter().enumerate() {
            let block = LayerBlock::new(*layer, input, offset);
            for (g, gate) in block.gate_names().iter().enumerate() {
                let (w, b) = block.gate_ranges(g);
                let suffix = if gate.is_empty() { String::new() } else { format!("_{gate}") };
                tensors.push(TensorSlot {
                    layer: l,
                    name: format!("w{suffix}"),
                    offset: offset + w.start,
                    rows: layer.width,
                    cols: block.cols(),
                });
                tensors.push(TensorSlot {
                    layer: l,
                    name: format!("b{suffix}"),
                    offset: offset + b.start,
                    rows: layer.width,
                    cols: 1,
                });
            }
            offset += block.len;
            input = layer.width;
            layers.push(block);
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
            tensors,
            len: offset,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[LayerBlock] {
        &self.layers
    }

    pub fn tensors(&self) -> &[TensorSlot] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tensor(&self, layer: usize, name: &str) -> Option<&TensorSlot> {
        self.tensors.iter().find(|t| t.layer == layer && t.name == name)
    }
}

/// Read-only view of one layer's parameters.
#[derive(Clone, Copy, Debug)]
pub struct LayerParams<'a> {
    pub block: &'a LayerBlock,
    pub values: &'a [f64],
}

impl<'a> LayerParams<'a> {
    pub fn new(block: &'a LayerBlock, values: &'a [f64]) -> Result<Self> {
        if values.len() != block.len {
            return Err(Error::DimensionMismatch {
                expected: block.len,
                found: values.len(),
            });
        }
        Ok(Self { block, values })
    }

    #[inline]
    pub fn weight(&self, gate: usize) -> &'a [f64] {
        &self.values[self.block.gate_ranges(gate).0]
    }

    #[inline]
    pub fn bias(&self, gate: usize) -> &'a [f64] {
        &self.values[self.block.gate_ranges(gate).1]
    }

    pub fn width(&self) -> usize {
        self.block.spec.width
    }

    pub fn input(&self) -> usize {
        self.block.input
    }
}

/// All weights and biases of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    layout: Arc<Layout>,
    values: Vec<f64>,
}

impl ParamSet {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        let layout = Arc::new(Layout::new(spec)?);
        let values = vec![0.0; layout.len()];
        Ok(Self { layout, values })
    }

    /// Glorot-uniform weights on `±sqrt(6 / (fan_in + fan_out))` with
    /// `fan_in = cols`, `fan_out = rows` of each gate matrix; zero biases
    /// except the LSTM forget gate. Draws come from ChaCha8 seeded with `seed`,
    /// in layout order.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = Arc::clone(&params.layout);
        for slot in layout.tensors() {
            let values = &mut params.values[slot.range()];
            if slot.name.starts_with('w') {
                let limit = (6.0 / (slot.cols + slot.rows) as f64).sqrt();
                for v in values {
                    *v = rng.random_range(-limit..limit);
                }
            } else if slot.name == "b_f" && layout.layers()[slot.layer].spec.kind == LayerKind::Lstm {
                values.fill(LSTM_FORGET_BIAS);
            }
        }
        Ok(params)
    }

    pub fn from_values(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self> {
        let layout = Arc::new(Layout::new(spec)?);
        if values.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                found: values.len(),
            });
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn spec(&self) -> &NetworkSpec {
        self.layout.spec()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layer(&self, l: usize) -> LayerParams<'_> {
        let block = &self.layout.layers()[l];
        LayerParams {
            block,
            values: &self.values[block.range()],
        }
    }

    pub fn tensor(&self, layer: usize, name: &str) -> Option<&[f64]> {
        self.layout.tensor(layer, name).map(|t| &self.values[t.range()])
    }

    pub fn tensor_mut(&mut self, layer: usize, name: &str) -> Option<&mut [f64]> {
        let range = self.layout.tensor(layer, name)?.range();
        Some(&mut self.values[range])
    }

    pub fn zero_gradient(&self) -> Gradient {
        Gradient {
            layout: Arc::clone(&self.layout),
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn is_congruent(&self, grad: &Gradient) -> bool {
        grad.values.len() == self.values.len()
            && (Arc::ptr_eq(&self.layout, &grad.layout) || *self.layout == *grad.layout)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ParamFile::from(self)).expect("parameter sets serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamFile = serde_json::from_str(text).map_err(|e| Error::format("<params>", e))?;
        file.into_params().map_err(|m| Error::format("<params>", m))
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

/// Serialised parameter set.
///
/// ```json
/// {"format":"hfm-params","version":1,
///  "spec":{"input_width":2,"layers":[{"kind":"dense","width":3,"activation":"relu"}, ...]},
///  "tensors":[{"layer":0,"name":"w","offset":0,"rows":3,"cols":2}, ...],
///  "values":[...]}
/// ```
///
/// Values are written with shortest round-trip formatting and parsed exactly,
/// so a save/load cycle is bit-exact. The tensor table must equal the layout
/// derived from `spec`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct ParamFile {
    format: String,
    version: u32,
    spec: NetworkSpec,
    tensors: Vec<TensorSlot>,
    values: Vec<f64>,
}

impl From<&ParamSet> for ParamFile {
    fn from(p: &ParamSet) -> Self {
        Self {
            format: PARAMS_FORMAT.to_string(),
            version: PARAMS_VERSION,
            spec: p.spec().clone(),
            tensors: p.layout.tensors().to_vec(),
            values: p.values.clone(),
        }
    }
}

impl ParamFile {
    pub(crate) fn into_params(self) -> std::result::Result<ParamSet, String> {
        if self.format != PARAMS_FORMAT {
            return Err(format!("expected format `{PARAMS_FORMAT}`, found `{}`", self.format));
        }
        if self.version != PARAMS_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        let layout = Layout::new(&self.spec).map_err(|e| e.to_string())?;
        if layout.tensors() != self.tensors.as_slice() {
            return Err("tensor table does not match the network spec".to_string());
        }
        if self.values.len() != layout.len() {
            return Err(format!("expected {} values, found {}", layout.len(), self.values.len()));
        }
        Ok(ParamSet {
            layout: Arc::new(layout),
            values: self.values,
        })
    }
}

/// Gradient of a scalar loss with respect to every entry of a [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    layout: Arc<Layout>,
    values: Vec<f64>,
}

impl Gradient {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub(crate) fn layer_mut(&mut self, l: usize) -> &mut [f64] {
        let range = self.layout.layers()[l].range();
        &mut self.values[range]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
