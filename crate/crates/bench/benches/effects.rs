use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairpath::fixtures;
use fairpath::qp::SolverOptions;
use fairpath::{build_repair_problem, pse_dd, solve_repair, RemovalMode};

fn discovery(c: &mut Criterion) {
    let mut group = c.benchmark_group("pse_dd");
    for nodes in [4, 6, 8, 10] {
        let model = fixtures::random_model(7, nodes, 0.5);
        let query = fixtures::standard_query(&model);
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &nodes, |b, _| {
            b.iter(|| pse_dd(black_box(&model), &query, 0.05).ok())
        });
    }
    group.finish();
}

fn repair(c: &mut Criterion) {
    let mut group = c.benchmark_group("repair");
    for nodes in [4, 6, 8] {
        let model = fixtures::random_discriminatory_model(11, nodes, 0.2);
        let query = fixtures::standard_query(&model);
        let Ok(problem) = build_repair_problem(&model, &query, 0.05, RemovalMode::DirectOnly) else {
            continue;
        };
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &nodes, |b, _| {
            b.iter(|| solve_repair(black_box(&problem), &SolverOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn loan_toy(c: &mut Criterion) {
    let model = fixtures::loan_toy();
    let query = fixtures::loan_toy_query(&model);
    c.bench_function("loan_toy_repair", |b| {
        b.iter(|| {
            let problem = build_repair_problem(black_box(&model), &query, 0.05, RemovalMode::Both).unwrap();
            solve_repair(&problem, &SolverOptions::default()).unwrap()
        })
    });
}

criterion_group!(benches, discovery, repair, loan_toy);
criterion_main!(benches);
