//! Benchmarks for the data-parallel hot paths. Run with the default
//! `parallel` feature for the rayon pool and with
//! `--no-default-features` for the sequential fallback; compare via
//! criterion baselines:
//!
//! ```text
//! cargo bench -p ntklab-core -- --save-baseline parallel
//! cargo bench -p ntklab-core --no-default-features -- --baseline parallel
//! ```

use criterion::{criterion_group, criterion_main, Criterion};
use ntklab_core::dataset::{gen_alternating_circle, gen_random_sphere, LabelMode};
use ntklab_core::kernel;
use ntklab_core::margin::{self, VBarMap};
use ntklab_core::train;

fn bench_margin_mc(c: &mut Criterion) {
    let ds = gen_alternating_circle(16).unwrap();
    let map = VBarMap::circle_rz(16).unwrap();
    c.bench_function("margin_mc_circle16_200k", |b| {
        b.iter(|| margin::margin_mc(&ds, &map, 200_000, 7).unwrap())
    });
}

fn bench_kernel_mc(c: &mut Criterion) {
    let ds = gen_random_sphere(8, 6, LabelMode::RandomSigns, 27).unwrap();
    c.bench_function("h_cts_mc_n8_200k", |b| {
        b.iter(|| kernel::h_cts_mc(&ds, 200_000, 5).unwrap())
    });
}

fn bench_concentration_trials(c: &mut Criterion) {
    let ds = gen_random_sphere(8, 6, LabelMode::RandomSigns, 27).unwrap();
    c.bench_function("concentration_m0_4096_x8", |b| {
        b.iter(|| kernel::concentration_check(&ds, 4096, 2, 0.05, 8, 3).unwrap())
    });
}

fn bench_train_squared_multiseed(c: &mut Criterion) {
    let ds = gen_random_sphere(8, 6, LabelMode::RandomSigns, 27).unwrap();
    let lambda = kernel::min_eig(&kernel::h_cts(&ds).unwrap()).unwrap();
    let mut cfg = train::derive_squared_schedule(8, lambda, 0.05, Some(512)).unwrap();
    cfg.steps = cfg.steps.min(3000);
    let mut group = c.benchmark_group("train_squared");
    group.sample_size(10);
    group.bench_function("m512_4seeds", |b| {
        b.iter(|| {
            let runs = ntklab_core::parallel::map_indexed(4, |trial| {
                let mut cfg = cfg.clone();
                cfg.seed = trial as u64;
                train::train_squared(&ds, &cfg).unwrap().steps_executed
            });
            runs.iter().sum::<usize>()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_margin_mc,
    bench_kernel_mc,
    bench_concentration_trials,
    bench_train_squared_multiseed
);
criterion_main!(benches);
