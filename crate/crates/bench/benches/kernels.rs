use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sampgap::certify::{best_tail_block, TailSums};
use sampgap::recovery::{approximation_numbers, equispaced_optimal_error, optimal_quadrature_weights};
use sampgap::sampling::{prop32_upper_bound, worst_case_error_sn, DirichletPlan};
use sampgap::seq::{DecayTail, Profile};
use sampgap::space::{integration_representer, KernelSpec};
use sampgap::trace_infty::select_indices;
use sampgap::{DecaySequence, SpectralSequence};

fn powerlog(bandwidth: usize) -> SpectralSequence {
    SpectralSequence::power_log(0.5, 1.0, 3, bandwidth).unwrap()
}

fn sampling(c: &mut Criterion) {
    let gamma = powerlog(1 << 16);
    let mut g = c.benchmark_group("sampling");
    for n in [64u64, 1024, 8192] {
        let plan = DirichletPlan::new(n).unwrap();
        g.bench_with_input(BenchmarkId::new("worst_case_sn", n), &plan, |b, p| {
            b.iter(|| worst_case_error_sn(p, black_box(&gamma)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("prop32", n), &n, |b, &n| {
            b.iter(|| prop32_upper_bound(black_box(&gamma), n).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("equispaced_optimal", n), &n, |b, &n| {
            b.iter(|| equispaced_optimal_error(black_box(&gamma), 2 * n + 1).unwrap())
        });
    }
    g.finish();
}

fn recovery(c: &mut Criterion) {
    let gamma = powerlog(1 << 16);
    c.bench_function("approximation_numbers/65536", |b| {
        b.iter(|| approximation_numbers(black_box(&gamma), 1 << 16).unwrap())
    });
    let small = powerlog(64);
    let spec = KernelSpec::new(&small).unwrap();
    let rep = integration_representer(&small).unwrap();
    let nodes: Vec<f64> = (0..33).map(|i| (i as f64 + 0.3 * (i % 3) as f64) / 33.0).collect();
    c.bench_function("optimal_quadrature_weights/33", |b| {
        b.iter(|| optimal_quadrature_weights(&spec, black_box(&nodes), &rep).unwrap())
    });
}

fn certify(c: &mut Criterion) {
    let gamma = powerlog(1 << 16);
    let sums = TailSums::new(&gamma).unwrap();
    c.bench_function("tail_sums/65536", |b| b.iter(|| TailSums::new(black_box(&gamma)).unwrap()));
    c.bench_function("best_tail_block/n=1024", |b| {
        b.iter(|| best_tail_block(black_box(&sums), 1024, 1 << 14).unwrap())
    });
}

fn indices(c: &mut Criterion) {
    let tail = |r: f64, beta: f64, shift: f64| {
        Some(DecayTail::Single(Profile::PowerLog { r, beta, scale: 1.0, stretch: 1.0, shift }))
    };
    let sigma = DecaySequence::with_tail(vec![1.0], tail(0.5, 0.0, 1.0)).unwrap();
    let tau = DecaySequence::with_tail(vec![], tail(0.0, 0.5, 2.0)).unwrap();
    c.bench_function("select_indices/j_max=6", |b| {
        b.iter(|| select_indices(black_box(&sigma), black_box(&tau), 6, 1e5).unwrap())
    });
}

criterion_group!(benches, sampling, recovery, certify, indices);
criterion_main!(benches);
