//! Analytic gradients versus central differences for every layer kind.

use hfm_core::nn::{
    forward, grad_check, loss_and_gradient, mse_loss, ActivationKind, LayerKind, LayerSpec, NetworkSpec, ParamSet,
    SequenceBatch,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn net(hidden: &[(LayerKind, usize, ActivationKind)]) -> NetworkSpec {
    let mut layers: Vec<LayerSpec> = hidden.iter().map(|&(k, w, a)| LayerSpec::new(k, w, a)).collect();
    layers.push(LayerSpec::output());
    NetworkSpec::new(2, layers).unwrap()
}

fn random_batch(steps: usize, seed: u64) -> SequenceBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SequenceBatch {
        inputs: (0..steps)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect(),
        targets: (0..steps).map(|_| rng.random_range(-1.5..1.5)).collect(),
    }
}

/// Central differences written out here, independent of the crate's checker.
fn max_rel_error_vs_fd(params: &ParamSet, batch: &SequenceBatch) -> f64 {
    let h = 1e-5;
    let loss = |p: &ParamSet| {
        let out = forward(p, &batch.inputs).unwrap().outputs;
        mse_loss(&out, &batch.targets).unwrap().0
    };
    let (_, grad, _) = loss_and_gradient(params, batch).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.values_mut()[i] += h;
        let mut minus = params.clone();
        minus.values_mut()[i] -= h;
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
        let a = grad.values()[i];
        worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-8));
    }
    worst
}

#[test]
fn lstm_bptt_five_steps() {
    for act in [ActivationKind::Tanh, ActivationKind::Relu] {
        let spec = net(&[(LayerKind::Lstm, 3, act)]);
        let p = ParamSet::init(&spec, 17).unwrap();
        let err = max_rel_error_vs_fd(&p, &random_batch(5, 1));
        assert!(err < 1e-5, "{act:?}: {err:e}");
    }
}

#[test]
fn gru_bptt_five_steps() {
    for act in [ActivationKind::Tanh, ActivationKind::Relu] {
        let spec = net(&[(LayerKind::Gru, 3, act)]);
        let p = ParamSet::init(&spec, 23).unwrap();
        let err = max_rel_error_vs_fd(&p, &random_batch(5, 2));
        assert!(err < 1e-5, "{act:?}: {err:e}");
    }
}

#[test]
fn stacked_lstm_gru_dense() {
    let spec = net(&[
        (LayerKind::Lstm, 3, ActivationKind::Tanh),
        (LayerKind::Gru, 3, ActivationKind::Tanh),
        (LayerKind::Dense, 2, ActivationKind::Sigmoid),
    ]);
    let p = ParamSet::init(&spec, 5).unwrap();
    let err = max_rel_error_vs_fd(&p, &random_batch(7, 3));
    assert!(err < 1e-5, "{err:e}");
}

#[test]
fn grad_check_mlp3_ten_samples() {
    let spec = net(&[(LayerKind::Dense, 3, ActivationKind::Relu)]);
    let p = ParamSet::init(&spec, 9).unwrap();
    let err = grad_check(&spec, &p, &random_batch(10, 4)).unwrap();
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn grad_check_recurrent_width_four() {
    for kind in [LayerKind::Lstm, LayerKind::Gru] {
        let spec = net(&[(kind, 4, ActivationKind::Relu)]);
        let p = ParamSet::init(&spec, 31).unwrap();
        let err = grad_check(&spec, &p, &random_batch(6, 5)).unwrap();
        assert!(err < 1e-5, "{kind:?}: {err:e}");
    }
}

#[test]
fn grad_check_rejects_foreign_spec() {
    let a = net(&[(LayerKind::Dense, 3, ActivationKind::Relu)]);
    let b = net(&[(LayerKind::Dense, 4, ActivationKind::Relu)]);
    let p = ParamSet::init(&a, 0).unwrap();
    assert!(grad_check(&b, &p, &random_batch(3, 0)).is_err());
}
