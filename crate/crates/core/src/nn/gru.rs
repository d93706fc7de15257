//! GRU cell.
//!
//! ```text
//! r = σ(W_r [h_{t-1}, x] + b_r)
//! z = σ(W_z [h_{t-1}, x] + b_z)
//! h̃ = act(W_h [r ⊙ h_{t-1}, x] + b_h)
//! h_t = (1 − z) ⊙ h_{t-1} + z ⊙ h̃
//! ```

use super::activation::sigmoid;
use super::linalg::{add_assign, affine, outer_acc, transpose_acc};
use super::network::CellState;
use super::params::LayerParams;
use crate::error::{Error, Result};

const R: usize = 0;
const Z: usize = 1;
const H: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct GruCache {
    /// `[h_{t-1}, x_t]`
    pub v: Vec<f64>,
    /// `[r ⊙ h_{t-1}, x_t]`
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub a_h: Vec<f64>,
    pub h_tilde: Vec<f64>,
}

pub fn gru_step(p: &LayerParams<'_>, x: &[f64], prev: &CellState) -> Result<(CellState, GruCache)> {
    let width = p.width();
    if x.len() != p.input() {
        return Err(Error::DimensionMismatch {
            expected: p.input(),
            found: x.len(),
        });
    }
    if prev.hidden.len() != width {
        return Err(Error::DimensionMismatch {
            expected: width,
            found: prev.hidden.len(),
        });
    }
    let act = p.block.spec.activation;
    let h_prev = &prev.hidden;
    let mut v = Vec::with_capacity(width + x.len());
    v.extend_from_slice(h_prev);
    v.extend_from_slice(x);

    let mut r = vec![0.0; width];
    affine(p.weight(R), p.bias(R), &v, &mut r);
    r.iter_mut().for_each(|a| *a = sigmoid(*a));
    let mut z = vec![0.0; width];
    affine(p.weight(Z), p.bias(Z), &v, &mut z);
    z.iter_mut().for_each(|a| *a = sigmoid(*a));

    let mut u = v.clone();
    for k in 0..width {
        u[k] = r[k] * h_prev[k];
    }
    let mut a_h = vec![0.0; width];
    affine(p.weight(H), p.bias(H), &u, &mut a_h);
    let h_tilde = act.apply_vec(&a_h);

    let hidden = (0..width).map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * h_tilde[k]).collect();
    Ok((
        CellState {
            hidden,
            cell: Vec::new(),
        },
        GruCache {
            v,
            u,
            r,
            z,
            a_h,
            h_tilde,
        },
    ))
}

/// Backward through one step given the total ∂L/∂h_t. Returns
/// `(∂L/∂x_t, ∂L/∂h_{t-1})` and accumulates parameter gradients into `grad`.
pub fn gru_step_backward(p: &LayerParams<'_>, cache: &GruCache, dh: &[f64], grad: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
    let width = p.width();
    let act = p.block.spec.activation;
    let h_prev = &cache.v[..width];

    let mut dh_prev = vec![0.0; width];
    let mut da_h = vec![0.0; width];
    let mut da_z = vec![0.0; width];
    for k in 0..width {
        let z = cache.z[k];
        dh_prev[k] = dh[k] * (1.0 - z);
        da_h[k] = dh[k] * z * act.derivative(cache.a_h[k]);
        da_z[k] = dh[k] * (cache.h_tilde[k] - h_prev[k]) * z * (1.0 - z);
    }

    let (w_range, b_range) = p.block.gate_ranges(H);
    outer_acc(&mut grad[w_range], &da_h, &cache.u);
    add_assign(&mut grad[b_range], &da_h);
    let mut du = vec![0.0; cache.u.len()];
    transpose_acc(p.weight(H), &da_h, &mut du);

    let mut da_r = vec![0.0; width];
    for k in 0..width {
        dh_prev[k] += du[k] * cache.r[k];
        let r = cache.r[k];
        da_r[k] = du[k] * h_prev[k] * r * (1.0 - r);
    }

    let mut dv = vec![0.0; cache.v.len()];
    for (g, dag) in [(R, &da_r), (Z, &da_z)] {
        let (w_range, b_range) = p.block.gate_ranges(g);
        outer_acc(&mut grad[w_range], dag, &cache.v);
        add_assign(&mut grad[b_range], dag);
        transpose_acc(p.weight(g), dag, &mut dv);
    }
    add_assign(&mut dh_prev, &dv[..width]);
    let dx: Vec<f64> = dv[width..].iter().zip(&du[width..]).map(|(a, b)| a + b).collect();
    (dx, dh_prev)
}
