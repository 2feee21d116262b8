use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use criterion::{criterion_group, criterion_main, Criterion};

use brokenray::scenarios::roundtrip_scene;
use brokenray::{simulate_interval, trace, Domain, RayState, SpeedField, Vec3};

fn rk4(c: &mut Criterion) {
    let d = Domain::ball(Vec3::new(110.0, 110.0, 0.0), 156.0).unwrap();
    let start = RayState::new(Vec3::zeros(), FRAC_PI_2, FRAC_PI_4);
    let affine = SpeedField::affine(1.0, 1.0, 0.0, 1.0);
    let constant = SpeedField::Constant(1.0);
    c.bench_function("trace 1000 steps affine", |b| {
        b.iter(|| trace(&start, 1.0, 1e-3, &affine, &d))
    });
    c.bench_function("trace 1000 steps constant", |b| {
        b.iter(|| trace(&start, 1.0, 1e-3, &constant, &d))
    });
}

fn forward(c: &mut Criterion) {
    let scene = roundtrip_scene(0, true).unwrap();
    let mut group = c.benchmark_group("forward");
    group.sample_size(10);
    group.bench_function("simulate round-trip scene", |b| {
        b.iter(|| simulate_interval(&scene, 0))
    });
    group.finish();
}

criterion_group!(benches, rk4, forward);
criterion_main!(benches);
