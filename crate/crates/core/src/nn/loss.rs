use crate::accum::CompensatedSum;
use crate::error::{Error, Result};

/// `J = (1/n) Σ (y − f)²` and `∂J/∂f = 2(f − y)/n`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = pred.len() as f64;
    let mut sum = CompensatedSum::new();
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&f, &y)| {
            let e = f - y;
            sum.add(e * e);
            2.0 * e / n
        })
        .collect();
    Ok((sum.value() / n, grad))
}
