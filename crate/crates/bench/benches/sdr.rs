use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use schoensdr::kernels::bandwidth_heuristic;
use schoensdr::sdr::{
    default_gcv_grid, fit_gsir_prepared, fit_sir, select_from_curves, GcvCurve, KernelPrep,
};
use schoensdr::sim::run_replication;
use schoensdr::{CovariateLaw, ExperimentConfig, Setting, Tuning};
use schoensdr_bench::setting_one;

fn prep(n: usize) -> (KernelPrep, KernelPrep) {
    let (x, y) = setting_one(n, 2);
    let kx = bandwidth_heuristic(&x).unwrap().kernel();
    let ky = bandwidth_heuristic(&nalgebra::DMatrix::from_column_slice(n, 1, &y))
        .unwrap()
        .kernel();
    (
        KernelPrep::new(&x, &kx).unwrap(),
        KernelPrep::from_response(&y, &ky).unwrap(),
    )
}

fn bench_fits(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    for n in [100, 200] {
        let (x, y) = setting_one(n, 3);
        group.bench_with_input(BenchmarkId::new("sir", n), &n, |b, _| {
            b.iter(|| fit_sir(black_box(&x), &y, 10, 1).unwrap())
        });
        let (px, py) = prep(n);
        group.bench_with_input(BenchmarkId::new("gsir_prepared", n), &n, |b, _| {
            b.iter(|| {
                fit_gsir_prepared(&px, &py, 0.2 * px.lambda_max(), 0.2 * py.lambda_max(), 1)
                    .unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("kernel_prep", n), &n, |b, _| {
            b.iter(|| prep(black_box(n)))
        });
        let grid = default_gcv_grid(30);
        group.bench_with_input(BenchmarkId::new("gcv_select", n), &n, |b, _| {
            b.iter(|| {
                let cx = GcvCurve::with_eigen(px.eig.clone(), &py.centered);
                let cy = GcvCurve::with_eigen(py.eig.clone(), &px.centered);
                select_from_curves(&cx, &cy, &grid).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_replication(c: &mut Criterion) {
    let mut group = c.benchmark_group("replication");
    group.sample_size(10);
    for (name, tuning) in [
        ("fixed", Tuning::fixed(0.2)),
        ("gcv", Tuning::gcv_default()),
    ] {
        let mut cfg = ExperimentConfig::new(Setting::S1, CovariateLaw::V3);
        cfg.tuning = tuning;
        group.bench_function(name, |b| b.iter(|| run_replication(black_box(&cfg), 0)));
    }
    group.finish();
}

criterion_group!(benches, bench_fits, bench_replication);
criterion_main!(benches);
