use std::hint::black_box;

use brsim_bench::{brownian, shapes_config, study_grid};
use brsim_core::{build_covariance, Generator, MethodConfig, ShapeSampler, StreamKey};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("drifted_path");
    for half in [20usize, 90, 220] {
        let grid = brsim_core::Grid::from_half_count(half, 0.1).unwrap();
        let factor = build_covariance(&brownian(), &grid).unwrap();
        let mut i = 0u64;
        group.bench_with_input(BenchmarkId::from_parameter(grid.len()), &factor, |b, f| {
            b.iter(|| {
                i += 1;
                black_box(f.sample(&mut StreamKey::new(1, 0, i).stream()))
            })
        });
    }
    group.finish();
}

fn shapes(c: &mut Criterion) {
    let sampler = ShapeSampler::new(&brownian(), 0.1, 22.0).unwrap();
    let mut rng = StreamKey::new(2, 4, 0).stream();
    c.bench_function("shape_rejection_p0.1_w22", |b| {
        b.iter(|| black_box(sampler.sample(&mut rng).unwrap()))
    });
}

fn realizations(c: &mut Criterion) {
    let grid = study_grid();
    let mut group = c.benchmark_group("realization");
    group.sample_size(20);
    for method in [0u8, 1, 2, 3] {
        let cfg = MethodConfig::default_for(method, &brownian(), &grid).unwrap();
        let generator = Generator::new(brownian(), grid, cfg, 3).unwrap();
        let mut rep = 0u64;
        group.bench_function(format!("method{method}"), |b| {
            b.iter(|| {
                rep += 1;
                black_box(generator.realize(rep).unwrap())
            })
        });
    }
    let generator = Generator::new(brownian(), grid, shapes_config(0.6), 3).unwrap();
    let mut rep = 0u64;
    group.bench_function("method4", |b| {
        b.iter(|| {
            rep += 1;
            black_box(generator.realize(rep).unwrap())
        })
    });
    group.finish();
}

criterion_group!(benches, paths, shapes, realizations);
criterion_main!(benches);
