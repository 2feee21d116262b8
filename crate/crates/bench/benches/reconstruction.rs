use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use brokenray::forward::broken_ray_through;
use brokenray::shooting::{reconstruct_point, reconstruct_point_indexed};
use brokenray::{Domain, Method, ReconstructionParams, SearchStrategy, SpeedField, Vec3};

fn search(c: &mut Criterion) {
    let d = Domain::ball(Vec3::zeros(), 1.0).unwrap();
    let f = SpeedField::affine(0.2, -0.1, 0.1, 1.0);
    let p = Vec3::new(-0.8, 0.05, 0.02);
    let out = Vec3::new(0.6, 0.8, 0.1).normalize();
    let (dp, _) = broken_ray_through(&p, &Vec3::new(-1.0, 0.0, 0.0), &out, &f, &d, 1e-3).unwrap();

    let mut group = c.benchmark_group("reconstruct_point");
    group.sample_size(10);
    for grid in [(12, 24), (24, 48)] {
        let params = ReconstructionParams {
            n_r: 100,
            grid,
            eps1: 0.02,
            eps2: None,
            strategy: SearchStrategy::ReceiverSweep,
            method: Method::Brute,
        };
        let label = format!("{}x{}", grid.0, grid.1);
        group.bench_with_input(BenchmarkId::new("brute", &label), &params, |b, p| {
            b.iter(|| reconstruct_point(&dp, &f, &d, p))
        });
        group.bench_with_input(BenchmarkId::new("indexed", &label), &params, |b, p| {
            b.iter(|| reconstruct_point_indexed(&dp, &f, &d, p))
        });
    }
    group.finish();
}

criterion_group!(benches, search);
criterion_main!(benches);
