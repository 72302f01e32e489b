//! Hot kernels timed with the data-parallel maps on and forced sequential.
//! Build with `--no-default-features` to time the compile-time fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use finsler_lab::corpus;
use finsler_lab::exec;
use finsler_lab::finsler::{log_curvatures, log_jets};
use finsler_lab::flow::{run_gradient_flow, FlowOptions};
use finsler_lab::functionals::{donaldson_l, lambda_const};
use finsler_lab::lab::Lab;
use finsler_lab::path::MetricPath;
use std::hint::black_box;
use std::time::Duration;

fn modes() -> Vec<&'static str> {
    if cfg!(feature = "parallel") {
        vec!["parallel", "sequential"]
    } else {
        vec!["fallback"]
    }
}

fn timed<R>(mode: &str, f: impl FnOnce() -> R) -> R {
    if mode == "sequential" {
        exec::with_sequential(f)
    } else {
        f()
    }
}

fn named(lab: &Lab, name: &str) -> finsler_lab::finsler::FinslerMetric {
    corpus::metrics(lab).into_iter().find(|(n, _)| n == name).expect("corpus metric").1
}

fn kernels(c: &mut Criterion) {
    let torus = Lab::torus(16, 16).expect("torus");
    let sphere = Lab::sphere(24, 16, 1, 1).expect("sphere");
    let g = named(&torus, "bump-mixed");
    let gs = named(&sphere, "fs-bump-x1");
    let jets = log_jets(&torus, &g).expect("jets");
    let h = log_jets(&torus, &named(&torus, "reference")).expect("jets");
    let path = MetricPath::linear(h, jets.clone(), 32).expect("path");
    let lambda = lambda_const(&torus).expect("lambda");
    let conformal = corpus::conformal_torus(&torus, 0.1);
    let flow_opts = FlowOptions { max_steps: 50, l_every: 0, ..Default::default() };

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10).measurement_time(Duration::from_secs(3)).warm_up_time(Duration::from_millis(500));
    for mode in modes() {
        group.bench_with_input(BenchmarkId::new("log_jets/p1", mode), &mode, |b, m| {
            b.iter(|| timed(m, || black_box(log_jets(&sphere, &gs).expect("jets"))))
        });
        group.bench_with_input(BenchmarkId::new("curvature/torus", mode), &mode, |b, m| {
            b.iter(|| timed(m, || black_box(log_curvatures(&torus, &jets))))
        });
        group.bench_with_input(BenchmarkId::new("donaldson_l/torus", mode), &mode, |b, m| {
            b.iter(|| timed(m, || black_box(donaldson_l(&torus, &path, lambda).l_value)))
        });
        group.bench_with_input(BenchmarkId::new("flow_50_steps/torus", mode), &mode, |b, m| {
            b.iter(|| timed(m, || black_box(run_gradient_flow(&torus, &conformal, lambda, &flow_opts).expect("flow"))))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
