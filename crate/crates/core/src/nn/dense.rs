use super::linalg::{add_assign, affine, outer_acc, transpose_acc};
use super::params::LayerParams;
use crate::error::{Error, Result};

/// Input and pre-activations retained for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseCache {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

/// `y_i = φ(b_i + Σ_j w_ij x_j)`.
pub fn dense_forward(p: &LayerParams<'_>, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
    if x.len() != p.input() {
        return Err(Error::DimensionMismatch {
            expected: p.input(),
            found: x.len(),
        });
    }
    let mut z = vec![0.0; p.width()];
    affine(p.weight(0), p.bias(0), x, &mut z);
    let y = p.block.spec.activation.apply_vec(&z);
    Ok((y, DenseCache { x: x.to_vec(), z }))
}

/// Accumulates parameter gradients into `grad` (the layer's block) and
/// returns ∂L/∂x.
pub fn dense_backward(p: &LayerParams<'_>, cache: &DenseCache, dy: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let act = p.block.spec.activation;
    let dz: Vec<f64> = dy.iter().zip(&cache.z).map(|(&d, &z)| d * act.derivative(z)).collect();
    let (w_range, b_range) = p.block.gate_ranges(0);
    outer_acc(&mut grad[w_range], &dz, &cache.x);
    add_assign(&mut grad[b_range], &dz);
    let mut dx = vec![0.0; p.input()];
    transpose_acc(p.weight(0), &dz, &mut dx);
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ActivationKind, LayerKind, LayerSpec, NetworkSpec, ParamSet};

    fn single(width: usize, act: ActivationKind) -> NetworkSpec {
        NetworkSpec::new(
            2,
            vec![
                LayerSpec::new(LayerKind::Dense, width, act),
                LayerSpec::new(LayerKind::Dense, 1, ActivationKind::Identity),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_give_bias() {
        let mut p = ParamSet::zeros(&single(3, ActivationKind::Identity)).unwrap();
        p.tensor_mut(0, "b").unwrap().copy_from_slice(&[0.5, -1.0, 2.0]);
        let (y, _) = dense_forward(&p.layer(0), &[3.0, 4.0]).unwrap();
        assert_eq!(y, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn unit_weights_sum_inputs() {
        let mut p = ParamSet::zeros(&single(1, ActivationKind::Identity)).unwrap();
        p.tensor_mut(0, "w").unwrap().copy_from_slice(&[1.0, 1.0]);
        let (y, _) = dense_forward(&p.layer(0), &[3.25, -1.5]).unwrap();
        assert_eq!(y, vec![1.75]);
    }

    #[test]
    fn wrong_fan_in() {
        let p = ParamSet::zeros(&single(2, ActivationKind::Tanh)).unwrap();
        assert!(matches!(
            dense_forward(&p.layer(0), &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    /// Central differences on `L = Σ_i c_i y_i` for random `c`.
    #[test]
    fn jacobian_matches_central_differences() {
        let spec = single(4, ActivationKind::Tanh);
        let p = ParamSet::init(&spec, 3).unwrap();
        let x = [0.3, -1.2];
        let c = [0.7, -0.2, 1.1, 0.4];
        let loss = |q: &ParamSet| -> f64 {
            let (y, _) = dense_forward(&q.layer(0), &x).unwrap();
            y.iter().zip(&c).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = dense_forward(&p.layer(0), &x).unwrap();
        let mut grad = vec![0.0; p.layer(0).block.len];
        dense_backward(&p.layer(0), &cache, &c, &mut grad);

        let h = 1e-5;
        for i in 0..grad.len() {
            let mut plus = p.clone();
            plus.values_mut()[i] += h;
            let mut minus = p.clone();
            minus.values_mut()[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / grad[i].abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-6, "param {i}: analytic {} fd {fd}", grad[i]);
        }
    }
}
