//! Timings for the hot paths: single-point evaluation, the three ensemble
//! averages, the oracle's analytic Gaussian integral, and a full optimizer run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cvteleport::averaging::{avg_fidelity, Distribution};
use cvteleport::fidelity::{kernel, point_fidelity, CoherentAmplitude};
use cvteleport::optimizer::{optimize_profile, Bounds, FreeParamSet};
use cvteleport::oracle::{
    fidelity_by_quadrature, gaussian_integral_2d, OutputCFSpec, QuadraticExponent,
};
use cvteleport::params::{ChannelParams, GaussianCF2, TeleporterParams};
use nalgebra::{Matrix2, Vector2};

fn operating_point() -> (TeleporterParams, ChannelParams) {
    let p = TeleporterParams::new(0.7, 0.9, 1.05, 0.95).unwrap();
    let c = ChannelParams::new(0.2, 0.5, 1.0).unwrap();
    (p, c)
}

fn bench_point(c: &mut Criterion) {
    let (p, ch) = operating_point();
    let eps = CoherentAmplitude::new(0.7, -0.4).unwrap();
    c.bench_function("kernel", |b| {
        b.iter(|| kernel(black_box(&p), black_box(&ch)).unwrap())
    });
    c.bench_function("point_fidelity", |b| {
        b.iter(|| point_fidelity(black_box(&p), black_box(&ch), black_box(eps)).unwrap())
    });
}

fn bench_averages(c: &mut Criterion) {
    let (p, ch) = operating_point();
    let dists = [
        ("avg_line", Distribution::line(1.0).unwrap()),
        ("avg_circle", Distribution::circle(1.5).unwrap()),
        ("avg_gauss", Distribution::gauss(0.8).unwrap()),
    ];
    for (name, dist) in &dists {
        c.bench_function(name, |b| {
            b.iter(|| avg_fidelity(black_box(&p), black_box(&ch), black_box(dist)).unwrap())
        });
    }
}

fn bench_oracle(c: &mut Criterion) {
    let q = QuadraticExponent {
        a: Matrix2::new(2.2, 0.6, 0.6, 1.4),
        l: Vector2::new(0.3, -0.2),
        phase: Vector2::new(0.8, -0.5),
        s: -0.4,
    };
    c.bench_function("gaussian_integral_2d", |b| {
        b.iter(|| gaussian_integral_2d(black_box(&q)).unwrap())
    });

    let (p, ch) = operating_point();
    let resource = GaussianCF2::tmsv(ch.r()).unwrap();
    let spec = OutputCFSpec::new(p, ch, &resource, CoherentAmplitude::new(0.7, -0.4).unwrap());
    c.bench_function("fidelity_by_quadrature", |b| {
        b.iter(|| fidelity_by_quadrature(black_box(&spec)).unwrap())
    });
}

fn bench_optimize(c: &mut Criterion) {
    let ch = ChannelParams::new(0.2, 0.0, 1.0).unwrap();
    let dist = Distribution::line(1.0).unwrap();
    let free = FreeParamSet::all_free();
    let bounds = Bounds::default();
    let mut group = c.benchmark_group("optimize");
    group.sample_size(20);
    group.bench_function("line_three_free", |b| {
        b.iter(|| optimize_profile(black_box(&dist), 0.95, &ch, &free, &bounds).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_point,
    bench_averages,
    bench_oracle,
    bench_optimize
);
criterion_main!(benches);
