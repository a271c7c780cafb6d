use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use swipt_core::{
    bessel_i0, bessel_i1, delivered_power_metric, invert_power_threshold, power_threshold,
    time_average_exponential, Complex64, ConstellationMetricInput, QuadratureSpec, RectennaParams,
};

fn bessel(c: &mut Criterion) {
    let mut group = c.benchmark_group("bessel");
    // One argument on each side of the series/asymptotic switch.
    for x in [0.5, 10.0, 29.0, 60.0] {
        group.bench_with_input(BenchmarkId::new("i0", x), &x, |b, &x| {
            b.iter(|| bessel_i0(black_box(x)))
        });
        group.bench_with_input(BenchmarkId::new("i1", x), &x, |b, &x| {
            b.iter(|| bessel_i1(black_box(x)))
        });
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let x = Complex64::new(1.5, -0.7);
    let mut group = c.benchmark_group("time_average_exponential");
    for n in [64, 1024, 4096] {
        let spec = QuadratureSpec::with_points(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &spec, |b, spec| {
            b.iter(|| time_average_exponential(black_box(x), 1.0, spec))
        });
    }
    group.finish();
}

fn rectenna(c: &mut Criterion) {
    let rect = RectennaParams::default();
    let input = ConstellationMetricInput::uniform(
        (0..32)
            .map(|k| Complex64::from_polar(1.0 + 0.01 * k as f64, 0.2 * k as f64))
            .collect(),
    )
    .unwrap();
    c.bench_function("delivered_power_metric/32", |b| {
        b.iter(|| delivered_power_metric(black_box(&input), &rect))
    });
    let v = power_threshold(1e-8, &rect).unwrap();
    c.bench_function("invert_power_threshold", |b| {
        b.iter(|| invert_power_threshold(black_box(v), &rect))
    });
}

criterion_group!(benches, bessel, quadrature, rectenna);
criterion_main!(benches);
