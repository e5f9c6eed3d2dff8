use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use galerkin_flm::estimator::empirical_moments_with;
use galerkin_flm::{
    make_slope, run_experiment, simulate_sample, Execution, ExperimentPlan, ProcessSpec, RiskKind, SlopeProfile,
    SlopeSpec, WeightSequence,
};

fn setup() -> (ProcessSpec, galerkin_flm::CoefficientVector) {
    let proc = ProcessSpec::gaussian(WeightSequence::PolyDecay { a: 1.0 }, 1.0, 0.5, 129).unwrap();
    let beta = make_slope(&SlopeSpec { p: 1.0, rho: 1.0, profile: SlopeProfile::SmoothDefault }, 129).unwrap();
    (proc, beta)
}

fn bench_replications(c: &mut Criterion) {
    let (proc, beta) = setup();
    let mut group = c.benchmark_group("run_experiment");
    for exec in [Execution::Sequential, Execution::Parallel] {
        let plan = ExperimentPlan::new(1000, 4, 1000.0, RiskKind::Prediction, 32, 7).with_execution(exec);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &plan, |b, plan| {
            b.iter(|| run_experiment(&proc, &beta, black_box(plan)).unwrap())
        });
    }
    group.finish();
}

fn bench_moments(c: &mut Criterion) {
    let (proc, beta) = setup();
    let sample = simulate_sample(&proc, &beta, 20_000, 3).unwrap();
    let mut group = c.benchmark_group("empirical_moments");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, exec| {
            b.iter(|| empirical_moments_with(black_box(&sample), 8, *exec).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_replications, bench_moments
}
criterion_main!(benches);
