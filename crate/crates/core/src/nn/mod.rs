//! Hand-differentiated network engine.
//!
//! Parameters live in one flat [`ParamSet`] whose [`Layout`] maps every
//! `(layer, tensor)` pair to a contiguous range. Each layer kind (dense, LSTM,
//! GRU) has an explicit forward step that records a cache and a matching
//! backward step; sequences are differentiated by full backpropagation through
//! time. All arithmetic is `f64`.

mod activation;
mod dense;
mod gradcheck;
mod gru;
mod linalg;
mod loss;
mod lstm;
mod network;
mod optim;
pub(crate) mod params;

pub use activation::ActivationKind;
pub use dense::{dense_backward, dense_forward, DenseCache};
pub use gradcheck::{grad_check, numerical_gradient, GRAD_CHECK_STEP};
pub use gru::{gru_step, gru_step_backward, GruCache};
pub use loss::mse_loss;
pub use lstm::{lstm_step, lstm_step_backward, LstmCache};
pub use network::{
    backward, forward, loss_and_gradient, CellState, ForwardTrace, LayerKind, LayerSpec, NetworkSpec,
    SequenceBatch,
};
pub use optim::{Optimizer, OptimizerConfig};
pub use params::{Gradient, LayerBlock, LayerParams, Layout, ParamSet, TensorSlot};
