use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rodsim_bench::{da_state, doi_state, grid};
use rodsim_core::da::{DAParams, DASolver};
use rodsim_core::doi::{DoiParams, DoiSolver};
use rodsim_core::{ops, ScalarField};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for n in [32, 64, 128] {
        let g = grid(n);
        let f = ScalarField::from_fn(&g, |x, y| (x + 2.0 * y).sin() * (3.0 * x).cos());
        group.bench_with_input(BenchmarkId::new("round_trip", n), &f, |b, f| {
            b.iter(|| ScalarField::from_values(&g, &black_box(f).values()))
        });
        let u = rodsim_bench::da_state(n).u;
        group.bench_with_input(BenchmarkId::new("leray", n), &u, |b, u| b.iter(|| ops::leray_project(black_box(u))));
    }
    group.finish();
}

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(20);
    for n in [32, 64] {
        let mut st = da_state(n);
        let mut solver = DASolver::new(&grid(n), DAParams::default()).unwrap();
        group.bench_function(BenchmarkId::new("da", n), |b| b.iter(|| solver.step(&mut st).unwrap()));
        for order in [8, 16] {
            let mut st = doi_state(n, order);
            let mut solver = DoiSolver::new(&grid(n), order, DoiParams::default()).unwrap();
            group.bench_function(BenchmarkId::new(format!("doi_j{order}"), n), |b| b.iter(|| solver.step(&mut st).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, transforms, steps);
criterion_main!(benches);
