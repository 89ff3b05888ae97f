//! Benchmarks comparing sequential and rayon-parallel sweep execution, plus
//! a single-trajectory baseline.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use lz_core::dynamics::{integrate, Protocol, SimConfig};
use lz_core::experiments::{log_spaced, sweep_with_mode, ExecMode, SweepSpec};
use lz_core::model::LzParams;

fn bench_spec() -> SweepSpec {
    let mut spec = SweepSpec::new(
        log_spaced(0.05, 1.0, 6),
        log_spaced(0.1, 5.0, 7),
        Protocol::Diabatic,
    );
    spec.window = Some((-30.0, 30.0));
    spec
}

fn bench_integrate(c: &mut Criterion) {
    let cfg = SimConfig::new(LzParams::new(0.5, 1.0).unwrap(), Protocol::Diabatic)
        .with_window(-30.0, 30.0)
        .with_dt(0.005);
    c.bench_function("integrate_single", |b| {
        b.iter_batched(|| cfg.clone(), |cfg| integrate(&cfg).unwrap(), BatchSize::SmallInput)
    });
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_6x7");
    group.sample_size(10);
    let spec = bench_spec();
    group.bench_function("sequential", |b| {
        b.iter(|| sweep_with_mode(&spec, ExecMode::Sequential).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| sweep_with_mode(&spec, ExecMode::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_integrate, bench_sweep);
criterion_main!(benches);
