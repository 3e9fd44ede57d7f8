use criterion::{criterion_group, criterion_main, Criterion};
use lpi_isac::harness::{run_scheme, Scheme};
use lpi_isac::solver::{solve, wmmse_aux_update, SolverConfig};
use lpi_isac_bench::desk_instance;
use std::hint::black_box;

fn solver(c: &mut Criterion) {
    let (scenario, constraints) = desk_instance(0);
    let cfg = SolverConfig::default();
    let start = solve(
        &scenario,
        &constraints,
        &SolverConfig {
            max_iters: 1,
            restore: false,
            ..cfg.clone()
        },
    )
    .unwrap()
    .bf;

    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    g.bench_function("wmmse_aux_update", |b| {
        b.iter(|| wmmse_aux_update(black_box(&start), &scenario).unwrap())
    });
    g.bench_function("ten_iterations", |b| {
        let short = SolverConfig {
            max_iters: 10,
            restore: false,
            ..cfg.clone()
        };
        b.iter(|| solve(black_box(&scenario), &constraints, &short).unwrap())
    });
    g.bench_function("proposed_full", |b| {
        b.iter(|| run_scheme(Scheme::Proposed, black_box(&scenario), &constraints, &cfg).unwrap())
    });
    g.bench_function("ts_hbf_full", |b| {
        b.iter(|| run_scheme(Scheme::TsHbf, black_box(&scenario), &constraints, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, solver);
criterion_main!(benches);
