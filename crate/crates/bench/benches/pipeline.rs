use std::hint::black_box;

use bohm2p_core::dynamics::{integrate_sampled, IntegratorSettings};
use bohm2p_core::ensemble::{propagate, sample_initial, SamplerSettings};
use bohm2p_core::statistics::{joint_probability, Coordinate, MarginalCdf, Region};
use bohm2p_core::wavefunction::{Composition, ConfigPoint, WaveModel};
use criterion::{criterion_group, criterion_main, Criterion};

fn slits() -> WaveModel {
    WaveModel::gaussian_slit(1.0, 10.0, 0.0, 0.0, Composition::Symmetrized).unwrap()
}

fn bench_integrate(c: &mut Criterion) {
    let m = slits();
    let start = ConfigPoint::new([9.7, 0.0], [-10.2, 0.0], 0.0);
    let times: Vec<f64> = (1..=10).map(f64::from).collect();
    let settings = IntegratorSettings::default();
    c.bench_function("integrate_sampled/gaussian_to_tau_5", |b| {
        b.iter(|| integrate_sampled(&m, black_box(&start), &times, &settings).unwrap())
    });
}

fn bench_sampling(c: &mut Criterion) {
    let m = slits();
    let s = SamplerSettings {
        n_samples: 1000,
        seed: 3,
        ..Default::default()
    };
    let mut g = c.benchmark_group("ensemble");
    g.sample_size(10);
    g.bench_function("sample_initial/1000", |b| b.iter(|| sample_initial(&m, black_box(&s)).unwrap()));
    let start = sample_initial(&m, &s).unwrap().points;
    let times: Vec<f64> = (1..=10).map(f64::from).collect();
    g.bench_function("propagate/1000", |b| {
        b.iter(|| propagate(&m, black_box(&start), &times, &IntegratorSettings::default()).unwrap())
    });
    g.finish();
}

fn bench_quadrature(c: &mut Criterion) {
    let m = slits();
    let mut g = c.benchmark_group("quadrature");
    g.sample_size(10);
    g.bench_function("joint_probability/both_above_t10", |b| {
        b.iter(|| joint_probability(&m, &Region::x_above(0.0), &Region::x_above(0.0), black_box(10.0)).unwrap())
    });
    g.bench_function("marginal_cdf/sum_t10", |b| {
        b.iter(|| MarginalCdf::new(&m, Coordinate::SumX, black_box(10.0)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_integrate, bench_sampling, bench_quadrature);
criterion_main!(benches);
