use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use condbayes::inference::{infer, scan, FrequencyCounts, UndefinedPolicy};
use condbayes::pipeline::{analyze_trace, initial_priors, run_iteration, PriorMode, RunOptions, Session};
use condbayes::Predicate;
use condbayes_bench::{cell, LENGTHS, VARIABLES};

fn bench_infer(c: &mut Criterion) {
    let counts = FrequencyCounts {
        n: 5,
        freq_o: 2,
        freq_g: 2,
        freq_o_and_g: 1,
        freq_g_and_not_o: 1,
    };
    c.bench_function("infer", |b| b.iter(|| infer(black_box(&counts), black_box(0.3))));
}

fn bench_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("scan");
    for len in LENGTHS {
        let cell = cell(10, len);
        let (outcomes, givens) = cell.spec.expand_predicates();
        let atoms: Vec<&Predicate> = outcomes.iter().chain(&givens).collect();
        group.throughput(Throughput::Elements(len as u64));
        group.bench_with_input(BenchmarkId::from_parameter(len), &cell.trace, |b, t| {
            b.iter(|| scan(t, &atoms).unwrap())
        });
    }
    group.finish();
}

fn bench_analyze(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    for vars in VARIABLES {
        let cell = cell(vars, LENGTHS[0]);
        let priors = initial_priors(&cell.spec, &PriorMode::Uniform).unwrap();
        group.throughput(Throughput::Elements(cell.set.len() as u64));
        group.bench_with_input(BenchmarkId::new("vars", vars), &cell, |b, cell| {
            b.iter(|| analyze_trace(&cell.set, &cell.trace, &priors, UndefinedPolicy::GivenUnmet).unwrap())
        });
    }
    group.finish();
}

fn bench_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("iteration");
    group.sample_size(10);
    for vars in VARIABLES {
        for len in LENGTHS {
            let cell = cell(vars, len);
            let priors = initial_priors(&cell.spec, &PriorMode::Uniform).unwrap();
            let id = BenchmarkId::new(format!("{vars}v"), len);
            group.bench_with_input(id, &cell, |b, cell| {
                b.iter(|| {
                    let mut session = Session::new(&cell.spec, priors.clone());
                    run_iteration(&cell.set, "bench", &cell.trace, &mut session, &RunOptions::default()).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_infer, bench_scan, bench_analyze, bench_iteration);
criterion_main!(benches);
