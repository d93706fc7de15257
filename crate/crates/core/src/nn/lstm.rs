//! LSTM cell.
//!
//! Gates act on the concatenation `v = [h_{t-1}, x_t]`:
//!
//! ```text
//! f = σ(W_f v + b_f)      i = σ(W_i v + b_i)
//! c̃ = act(W_c v + b_c)    o = σ(W_o v + b_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ c̃
//! h_t = o ⊙ act(c_t)
//! ```
//!
//! Gates are always sigmoid; `act` is the layer's configured activation.

use super::activation::sigmoid;
use super::linalg::{add_assign, affine, outer_acc, transpose_acc};
use super::network::CellState;
use super::params::LayerParams;
use crate::error::{Error, Result};

const F: usize = 0;
const I: usize = 1;
const C: usize = 2;
const O: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmCache {
    /// `[h_{t-1}, x_t]`
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    /// Candidate pre-activation.
    pub a_c: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
}

fn check(p: &LayerParams<'_>, x: &[f64], prev: &CellState) -> Result<()> {
    if x.len() != p.input() {
        return Err(Error::DimensionMismatch {
            expected: p.input(),
            found: x.len(),
        });
    }
    for len in [prev.hidden.len(), prev.cell.len()] {
        if len != p.width() {
            return Err(Error::DimensionMismatch {
                expected: p.width(),
                found: len,
            });
        }
    }
    Ok(())
}

pub fn lstm_step(p: &LayerParams<'_>, x: &[f64], prev: &CellState) -> Result<(CellState, LstmCache)> {
    check(p, x, prev)?;
    let width = p.width();
    let act = p.block.spec.activation;
    let mut v = Vec::with_capacity(width + x.len());
    v.extend_from_slice(&prev.hidden);
    v.extend_from_slice(x);

    let gate = |g: usize| {
        let mut a = vec![0.0; width];
        affine(p.weight(g), p.bias(g), &v, &mut a);
        a
    };
    let f: Vec<f64> = gate(F).into_iter().map(sigmoid).collect();
    let i: Vec<f64> = gate(I).into_iter().map(sigmoid).collect();
    let o: Vec<f64> = gate(O).into_iter().map(sigmoid).collect();
    let a_c = gate(C);
    let c_tilde = act.apply_vec(&a_c);

    let c: Vec<f64> = (0..width).map(|k| f[k] * prev.cell[k] + i[k] * c_tilde[k]).collect();
    let hidden: Vec<f64> = (0..width).map(|k| o[k] * act.apply(c[k])).collect();

    let next = CellState {
        hidden,
        cell: c.clone(),
    };
    let cache = LstmCache {
        v,
        f,
        i,
        o,
        a_c,
        c_tilde,
        c_prev: prev.cell.clone(),
        c,
    };
    Ok((next, cache))
}

/// Backward through one step given ∂L/∂h_t and ∂L/∂c_t arriving from above
/// and from step t+1. Returns `(∂L/∂x_t, ∂L/∂h_{t-1}, ∂L/∂c_{t-1})` and
/// accumulates parameter gradients into `grad`.
pub fn lstm_step_backward(
    p: &LayerParams<'_>,
    cache: &LstmCache,
    dh: &[f64],
    dc_next: &[f64],
    grad: &mut [f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let width = p.width();
    let act = p.block.spec.activation;
    let mut da = [vec![0.0; width], vec![0.0; width], vec![0.0; width], vec![0.0; width]];
    let mut dc_prev = vec![0.0; width];
    for k in 0..width {
        let act_c = act.apply(cache.c[k]);
        let dc = dc_next[k] + dh[k] * cache.o[k] * act.derivative(cache.c[k]);
        da[O][k] = dh[k] * act_c * cache.o[k] * (1.0 - cache.o[k]);
        da[F][k] = dc * cache.c_prev[k] * cache.f[k] * (1.0 - cache.f[k]);
        da[I][k] = dc * cache.c_tilde[k] * cache.i[k] * (1.0 - cache.i[k]);
        da[C][k] = dc * cache.i[k] * act.derivative(cache.a_c[k]);
        dc_prev[k] = dc * cache.f[k];
    }

    let mut dv = vec![0.0; cache.v.len()];
    for (g, dag) in da.iter().enumerate() {
        let (w_range, b_range) = p.block.gate_ranges(g);
        outer_acc(&mut grad[w_range], dag, &cache.v);
        add_assign(&mut grad[b_range], dag);
        transpose_acc(p.weight(g), dag, &mut dv);
    }
    let dx = dv.split_off(width);
    (dx, dv, dc_prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ActivationKind, LayerKind, LayerSpec, NetworkSpec, ParamSet};
    use proptest::prelude::*;

    fn spec(width: usize, act: ActivationKind) -> NetworkSpec {
        NetworkSpec::new(
            2,
            vec![
                LayerSpec::new(LayerKind::Lstm, width, act),
                LayerSpec::new(LayerKind::Dense, 1, ActivationKind::Identity),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_params_stay_at_rest() {
        let p = ParamSet::zeros(&spec(3, ActivationKind::Tanh)).unwrap();
        let (next, cache) = lstm_step(&p.layer(0), &[4.0, -2.0], &CellState::zeros(3, true)).unwrap();
        assert_eq!(next.hidden, vec![0.0; 3]);
        assert_eq!(next.cell, vec![0.0; 3]);
        assert_eq!(cache.f, vec![0.5; 3]);
    }

    #[test]
    fn saturated_forget_gate_keeps_memory() {
        let mut p = ParamSet::init(&spec(3, ActivationKind::Relu), 5).unwrap();
        p.tensor_mut(0, "b_f").unwrap().fill(1e3);
        p.tensor_mut(0, "b_i").unwrap().fill(-1e3);
        let prev = CellState {
            hidden: vec![0.2, -0.1, 0.4],
            cell: vec![1.5, -0.75, 3.0],
        };
        let (next, _) = lstm_step(&p.layer(0), &[0.3, 0.9], &prev).unwrap();
        assert_eq!(next.cell, prev.cell);
    }

    #[test]
    fn dimension_checks() {
        let p = ParamSet::zeros(&spec(3, ActivationKind::Tanh)).unwrap();
        assert!(lstm_step(&p.layer(0), &[1.0], &CellState::zeros(3, true)).is_err());
        assert!(lstm_step(&p.layer(0), &[1.0, 2.0], &CellState::zeros(2, true)).is_err());
        assert!(lstm_step(&p.layer(0), &[1.0, 2.0], &CellState::zeros(3, false)).is_err());
    }

    proptest! {
        #[test]
        fn gates_lie_in_open_unit_interval(seed in any::<u64>(), x0 in -5.0f64..5.0, x1 in -5.0f64..5.0) {
            let p = ParamSet::init(&spec(4, ActivationKind::Relu), seed).unwrap();
            let (_, cache) = lstm_step(&p.layer(0), &[x0, x1], &CellState::zeros(4, true)).unwrap();
            for g in cache.f.iter().chain(&cache.i).chain(&cache.o) {
                prop_assert!(*g > 0.0 && *g < 1.0);
            }
        }
    }
}
