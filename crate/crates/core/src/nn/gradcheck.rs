use super::loss::mse_loss;
use super::network::{forward, loss_and_gradient, NetworkSpec, SequenceBatch};
use super::params::ParamSet;
use crate::error::{Error, Result};

/// Central-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

fn loss_at(params: &ParamSet, batch: &SequenceBatch) -> Result<f64> {
    let out = forward(params, &batch.inputs)?.outputs;
    Ok(mse_loss(&out, &batch.targets)?.0)
}

/// Central differences of the MSE loss with respect to every parameter.
/// Uses only forward passes.
pub fn numerical_gradient(params: &ParamSet, batch: &SequenceBatch, h: f64) -> Result<Vec<f64>> {
    let mut probe = params.clone();
    let mut fd = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let w = params.values()[i];
        probe.values_mut()[i] = w + h;
        let up = loss_at(&probe, batch)?;
        probe.values_mut()[i] = w - h;
        let down = loss_at(&probe, batch)?;
        probe.values_mut()[i] = w;
        fd.push((up - down) / (2.0 * h));
    }
    Ok(fd)
}

/// Largest `|analytic − fd| / max(|analytic|, |fd|, 1e-8)` over all
/// parameters, with `h = 1e-5`.
pub fn grad_check(spec: &NetworkSpec, params: &ParamSet, batch: &SequenceBatch) -> Result<f64> {
    if params.spec() != spec {
        return Err(Error::LayoutMismatch);
    }
    if batch.inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (_, analytic, _) = loss_and_gradient(params, batch)?;
    let fd = numerical_gradient(params, batch, GRAD_CHECK_STEP)?;
    Ok(analytic
        .values()
        .iter()
        .zip(&fd)
        .map(|(&a, &f)| (a - f).abs() / a.abs().max(f.abs()).max(1e-8))
        .fold(0.0, f64::max))
}
