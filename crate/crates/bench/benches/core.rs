use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use hfm_core::architectures::{train, Architecture, Normalizer, TrainConfig};
use hfm_core::iso9869::average_u_value;
use hfm_core::nn::{loss_and_gradient, ActivationKind, ParamSet, SequenceBatch};
use hfm_core::synth::{presets, simulate};
use hfm_core::{MeasurementSeries, SplitSpec};

fn series() -> MeasurementSeries {
    simulate(&presets::reference_wall(), &presets::sinusoidal(), 0).unwrap()
}

fn batch(s: &MeasurementSeries, len: usize) -> SequenceBatch {
    let head = s.slice(0..len).unwrap();
    let norm = Normalizer::fit(&head).unwrap();
    SequenceBatch {
        inputs: norm.inputs(&head),
        targets: head.samples().iter().map(|x| norm.apply(2, x.heat_flux)).collect(),
    }
}

fn forward_backward(c: &mut Criterion) {
    let s = series();
    let b = batch(&s, 326);
    let mut group = c.benchmark_group("forward_backward_326_steps");
    for arch in [
        Architecture::MLP3,
        Architecture::Lstm(16),
        Architecture::Gru(16),
        Architecture::LSTM100,
        Architecture::GRU100,
        Architecture::LSTMGRU100,
    ] {
        let spec = arch.network(ActivationKind::Relu);
        let params = ParamSet::init(&spec, 0).unwrap();
        group.bench_function(arch.to_string(), |bench| {
            bench.iter(|| loss_and_gradient(black_box(&params), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let s = series();
    let cfg = TrainConfig {
        max_epochs: 50,
        patience: usize::MAX,
        ..TrainConfig::default()
    };
    let spec = Architecture::Lstm(16).network(ActivationKind::Tanh);
    c.bench_function("train_lstm16_half_50_epochs", |bench| {
        bench.iter(|| train(&spec, black_box(&s), SplitSpec::HALF, 0, &cfg).unwrap())
    });
}

fn simulation_and_u(c: &mut Criterion) {
    let wall = presets::reference_wall();
    let scenario = presets::sinusoidal();
    c.bench_function("simulate_sinusoidal_490", |bench| {
        bench.iter(|| simulate(black_box(&wall), black_box(&scenario), 0).unwrap())
    });
    let s = series();
    c.bench_function("average_u_490", |bench| {
        bench.iter_batched(|| s.clone(), |s| average_u_value(&s).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, forward_backward, training, simulation_and_u);
criterion_main!(benches);
