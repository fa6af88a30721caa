use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robust_learning::simulation::{estimate_with, Execution, Measure, SimConfig};
use robust_learning::{thresholds, Problem, StoppingPolicy};

fn monte_carlo(c: &mut Criterion) {
    let policy = StoppingPolicy::solve(&Problem::ellsberg(0.125, 0.04, 0.01, 1.0).unwrap()).unwrap();
    let mut group = c.benchmark_group("estimate");
    group.sample_size(10);
    for &paths in &[1_000usize, 10_000] {
        let mut cfg = SimConfig::new(Measure::TrueTheta(0.0), paths, 1);
        cfg.dt = 1e-3;
        group.bench_with_input(BenchmarkId::new("sequential", paths), &cfg, |b, cfg| {
            b.iter(|| estimate_with(cfg, &policy, Execution::Sequential).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", paths), &cfg, |b, cfg| {
            b.iter(|| estimate_with(cfg, &policy, Execution::Parallel).unwrap())
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let ellsberg = Problem::ellsberg(0.125, 0.04, 0.01, 1.0).unwrap();
    let test = Problem::hypothesis_test(1.0, 1.0, 2.0, 0.3, 0.6, 0.05, 1.0).unwrap();
    c.bench_function("solve_rhat", |b| b.iter(|| thresholds::solve_rhat(&ellsberg.params).unwrap()));
    c.bench_function("classify two-urn", |b| b.iter(|| thresholds::classify(&ellsberg).unwrap()));
    c.bench_function("classify two-action shooting", |b| b.iter(|| thresholds::classify(&test).unwrap()));
}

criterion_group!(benches, monte_carlo, solvers);
criterion_main!(benches);
