//! Costs of the pieces an experiment run is made of: the dense symmetric
//! eigensolve, a single iteration of each algorithm, assembling the stacked
//! operator's spectrum, and the decentralized rate estimator.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use consensus_core::doi::estimate_lambda2;
use consensus_core::engine::{
    init_slope, run_to_accuracy, step_accelerated, step_memoryless, Algo, InitModel, NodeState,
};
use consensus_core::spectral::{phi_spectrum, symmetric_eigenvalues};
use consensus_core::{AcceleratedOperator, DoiConfig, Graph, PredictorParams, WeightMatrix};

fn chain_weights(n: usize) -> WeightMatrix {
    WeightMatrix::metropolis_hastings(&Graph::chain(n).unwrap())
}

fn eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("symmetric_eigenvalues");
    for n in [50, 100, 200] {
        let w = chain_weights(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| {
            b.iter(|| symmetric_eigenvalues(black_box(w)).unwrap())
        });
    }
    group.finish();
}

fn single_step(c: &mut Criterion) {
    let n = 200;
    let w = chain_weights(n);
    let op = AcceleratedOperator::optimal(&w, PredictorParams::least_squares()).unwrap();
    let x = init_slope(w.graph());
    let states: Vec<NodeState> = x.iter().map(|&v| NodeState::new(v)).collect();

    let mut group = c.benchmark_group("step");
    group.bench_function(BenchmarkId::new("memoryless", n), |b| {
        b.iter(|| step_memoryless(black_box(&w), black_box(&x)))
    });
    group.bench_function(BenchmarkId::new("accelerated", n), |b| {
        b.iter(|| step_accelerated(black_box(&op), black_box(&states)))
    });
    group.finish();
}

fn stacked_spectrum(c: &mut Criterion) {
    let w = chain_weights(200);
    let spectrum = symmetric_eigenvalues(&w).unwrap();
    let theta = PredictorParams::least_squares();
    let op = AcceleratedOperator::optimal(&w, theta).unwrap();
    let alpha = op.alpha();
    c.bench_function("phi_spectrum/200", |b| {
        b.iter(|| phi_spectrum(black_box(&spectrum), black_box(&theta), black_box(alpha)))
    });
}

fn estimator(c: &mut Criterion) {
    let w = chain_weights(50);
    let cfg = DoiConfig::recommended(&w, 17).unwrap();
    c.bench_function("estimate_lambda2/chain_50", |b| {
        b.iter(|| estimate_lambda2(black_box(&w), black_box(&cfg)).unwrap())
    });
}

fn full_run(c: &mut Criterion) {
    let w = chain_weights(50);
    let op = AcceleratedOperator::optimal(&w, PredictorParams::least_squares()).unwrap();
    let x0 = init_slope(w.graph());
    c.bench_function("run_to_accuracy/accelerated_chain_50", |b| {
        b.iter(|| {
            run_to_accuracy(
                black_box(&Algo::Accelerated(&op)),
                black_box(&x0),
                1e-5,
                1000,
                InitModel::Slope,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, eigensolver, single_step, stacked_spectrum, estimator, full_run);
criterion_main!(benches);
