//! Sequential vs rayon execution of the trial-level ensembles.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdemon_core::demons::{
    run_feedback_demon_with, run_trajectory_demon_with, FeedbackDemonConfig, TrajectoryDemonConfig,
};
use qdemon_core::dynamics::SmeConfig;
use qdemon_core::parallel::Execution;
use qdemon_core::thermo::exp_average_with;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn feedback(c: &mut Criterion) {
    let cfg = FeedbackDemonConfig {
        trials: 50_000,
        seed: 1,
        ..FeedbackDemonConfig::default()
    };
    let mut group = c.benchmark_group("feedback_demon");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_feedback_demon_with(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn trajectory(c: &mut Criterion) {
    let sme = SmeConfig::new(0.01, 0.3, 1.0, 2).unwrap();
    let cfg = TrajectoryDemonConfig::new(4.0, sme, 1.0, 1.0, 500, 2);
    let mut group = c.benchmark_group("trajectory_demon");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_trajectory_demon_with(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn bootstrap(c: &mut Criterion) {
    let samples: Vec<f64> = (0..20_000)
        .map(|k| ((k * 7919) % 1000) as f64 / 500.0 - 1.0)
        .collect();
    let mut group = c.benchmark_group("exp_average_bootstrap");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| exp_average_with(black_box(&samples), 3, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, feedback, trajectory, bootstrap);
criterion_main!(benches);
