use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hfnet::dynamics::{correlation_tensor, truncated_resolvent};
use hfnet::firefly::Layout;
use hfnet::patterns::gaussian_2d;
use hfnet::plasticity::evolve_weights;
use hfnet::{ActiveSet, FireflyPopulation, PlasticityParams, Shape, SwarmParams, WeightMatrix};

/// Distance-decaying weights on a `side x side` grid with row sums near 0.5.
fn grid_weights(side: usize) -> WeightMatrix {
    let n = side * side;
    let raw = |i: usize, j: usize| {
        if i == j {
            return 0.0;
        }
        let (ri, ci) = ((i / side) as f64, (i % side) as f64);
        let (rj, cj) = ((j / side) as f64, (j % side) as f64);
        (-((ri - rj).powi(2) + (ci - cj).powi(2)) / 2.0).exp()
    };
    let sums: Vec<f64> = (0..n).map(|i| (0..n).map(|j| raw(i, j)).sum()).collect();
    WeightMatrix::from_fn(n, |i, j| 0.5 * raw(i, j) / sums[i]).unwrap()
}

fn resolvent(c: &mut Criterion) {
    let mut group = c.benchmark_group("truncated_resolvent");
    for side in [5, 11] {
        let w = grid_weights(side);
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &w, |b, w| {
            b.iter(|| truncated_resolvent(black_box(w)))
        });
    }
    group.finish();
}

fn tensor(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlation_tensor");
    for side in [5, 11] {
        let d = truncated_resolvent(&grid_weights(side));
        let n = side * side;
        let sources = ActiveSet::from_indices((0..n).step_by(3));
        group.bench_with_input(BenchmarkId::from_parameter(n), &(d, sources), |b, (d, s)| {
            b.iter(|| correlation_tensor(black_box(d), black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn evolve(c: &mut Criterion) {
    let w = WeightMatrix::from_fn(25, |i, j| if i == j { 0.0 } else { 1.0 / 24.0 }).unwrap();
    let d = truncated_resolvent(&grid_weights(5));
    let t = correlation_tensor(&d, &ActiveSet::from_indices([6, 7, 8, 11, 12, 13])).unwrap();
    let params = PlasticityParams {
        dt: 0.05,
        ..PlasticityParams::default()
    };
    c.bench_function("evolve_weights/25", |b| {
        b.iter(|| evolve_weights(black_box(&w), black_box(&t), &params).unwrap())
    });
}

fn swarm(c: &mut Criterion) {
    let shape = Shape::Grid { rows: 5, cols: 5 };
    let layout = Layout::from_shape(shape);
    let activity = gaussian_2d(5, 5, 2.0, 2.0, 1.0, 1.0).unwrap();
    let params = SwarmParams {
        gamma: 12.5,
        eta: 0.025,
        d_min: 0.025,
        ..SwarmParams::default()
    };
    c.bench_function("swarm_step/100_flies", |b| {
        b.iter_batched(
            || FireflyPopulation::random(100, params).unwrap(),
            |mut pop| pop.step(black_box(&activity), &layout).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, resolvent, tensor, evolve, swarm);
criterion_main!(benches);
