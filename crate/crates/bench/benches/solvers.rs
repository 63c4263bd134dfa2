use std::hint::black_box;
use std::time::Duration;

use aqec_core::benchmark::Workload;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("grl_workload");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for dim in [8, 16, 32] {
        let w = Workload::new(dim).expect("workload builds");
        group.bench_with_input(BenchmarkId::new("analytic", dim), &w, |b, w| {
            b.iter(|| black_box(w.run_analytic().expect("analytic run")))
        });
        group.bench_with_input(BenchmarkId::new("dense", dim), &w, |b, w| {
            b.iter(|| black_box(w.run_dense().expect("dense run")))
        });
    }
    group.finish();
}

criterion_group!(benches, solvers);
criterion_main!(benches);
