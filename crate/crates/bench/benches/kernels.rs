use std::hint::black_box;

use bohm2p_core::dynamics::{velocity, velocity_sum_x};
use bohm2p_core::wavefunction::{evaluate, gradient, Composition, ConfigPoint, WaveModel};
use criterion::{criterion_group, criterion_main, Criterion};

fn models() -> Vec<(&'static str, WaveModel, ConfigPoint)> {
    vec![
        (
            "plane_wave",
            WaveModel::plane_wave(1.0, 0.5).unwrap(),
            ConfigPoint::new([0.3, 0.1], [-0.2, 0.4], 1.0),
        ),
        (
            "oscillator",
            WaveModel::oscillator(1.0, 7.0).unwrap(),
            ConfigPoint::new([6.5], [-7.2], 0.3),
        ),
        (
            "gaussian_symmetrized",
            WaveModel::gaussian_slit(1.0, 10.0, 0.0, 0.0, Composition::Symmetrized).unwrap(),
            ConfigPoint::new([9.5, 0.0], [-10.4, 0.0], 2.0),
        ),
        (
            "gaussian_product",
            WaveModel::gaussian_slit(1.0, 3.0, 0.5, 1.0, Composition::Product).unwrap(),
            ConfigPoint::new([2.5, 0.0], [-3.4, 0.0], 2.0),
        ),
    ]
}

fn bench_evaluate(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate");
    for (name, m, p) in models() {
        g.bench_function(name, |b| b.iter(|| evaluate(black_box(&m), black_box(&p)).unwrap()));
    }
    g.finish();
}

fn bench_gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient");
    for (name, m, p) in models() {
        g.bench_function(name, |b| b.iter(|| gradient(black_box(&m), black_box(&p)).unwrap()));
    }
    g.finish();
}

fn bench_velocity(c: &mut Criterion) {
    let mut g = c.benchmark_group("velocity");
    for (name, m, p) in models() {
        g.bench_function(name, |b| b.iter(|| velocity(black_box(&m), black_box(&p)).unwrap()));
    }
    let (_, m, p) = models().pop().unwrap();
    g.bench_function("velocity_sum_x/gaussian_product", |b| {
        b.iter(|| velocity_sum_x(black_box(&m), black_box(&p)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_evaluate, bench_gradient, bench_velocity);
criterion_main!(benches);
