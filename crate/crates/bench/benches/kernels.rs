use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use quasibeam::bandlimited::random_band_limited;
use quasibeam::field::RealField;
use quasibeam::gauge::{gauge_numeric, ControlConfig, DerivativeMethod, ParametricConfig};
use quasibeam::oracle::free_gaussian;
use quasibeam::propagate::{IntegratorChoice, IntegratorKind, Propagator};
use quasibeam::scenario::{make_magnetic, MagneticScalar};
use quasibeam::spectral::Fft2d;
use quasibeam::{GaugeFields, RealVectorField, TransverseGrid};

fn bench_fft2d(c: &mut Criterion) {
    let g = TransverseGrid::new(256, 256, 16.0, 16.0).unwrap();
    let psi = free_gaussian(g, 0.0);
    let mut fft = Fft2d::new(&g);
    c.bench_function("fft2d_roundtrip_256", |b| {
        b.iter_batched_ref(
            || psi.values().to_vec(),
            |data| {
                fft.forward(data);
                fft.inverse(data);
                black_box(data.len())
            },
            BatchSize::LargeInput,
        )
    });
}

fn bench_strang_step(c: &mut Criterion) {
    let g = TransverseGrid::new(256, 256, 16.0, 16.0).unwrap();
    let gauge = GaugeFields::new(
        RealVectorField::zeros(g),
        RealField::from_fn(g, |x, y| 0.1 * (x * x + y * y)),
    );
    let mut p = Propagator::new(
        free_gaussian(g, 0.0),
        &gauge,
        None,
        IntegratorChoice::new(IntegratorKind::Strang, 1e-3),
        None,
    )
    .unwrap();
    c.bench_function("strang_step_256", |b| b.iter(|| p.step().unwrap()));
}

fn bench_mixed_rep_step(c: &mut Criterion) {
    let g = TransverseGrid::new(256, 256, 16.0, 16.0).unwrap();
    let sc = make_magnetic(g, 1.0, MagneticScalar::Neglected).unwrap();
    let mut p = Propagator::new(
        free_gaussian(g, 0.0),
        &sc.fields.gauge,
        None,
        IntegratorChoice::new(IntegratorKind::MixedRep, 1e-3),
        None,
    )
    .unwrap();
    c.bench_function("mixed_rep_step_256", |b| b.iter(|| p.step().unwrap()));
}

fn bench_rk4_step(c: &mut Criterion) {
    let g = TransverseGrid::new(128, 128, 16.0, 16.0).unwrap();
    let sc = make_magnetic(g, 1.0, MagneticScalar::Neglected).unwrap();
    let choice = IntegratorChoice::rk4_auto(&g, &sc.fields.gauge, None, 0.5);
    let mut p =
        Propagator::new(free_gaussian(g, 0.0), &sc.fields.gauge, None, choice, None).unwrap();
    c.bench_function("rk4_step_128", |b| b.iter(|| p.step().unwrap()));
}

fn bench_gauge_numeric(c: &mut Criterion) {
    let g = TransverseGrid::new(128, 128, 16.0, 16.0).unwrap();
    let cfg = ControlConfig::Parametric(ParametricConfig {
        imbalance: random_band_limited(g, 3, 3, 0.3),
        rel_phase: random_band_limited(g, 4, 3, 1.0),
        common_phase: RealField::zeros(g),
        derivative: DerivativeMethod::Spectral,
        gradients: None,
    });
    c.bench_function("gauge_numeric_128", |b| {
        b.iter(|| black_box(gauge_numeric(&cfg).unwrap()))
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = bench_fft2d, bench_strang_step, bench_mixed_rep_step, bench_rk4_step, bench_gauge_numeric
}
criterion_main!(kernels);
