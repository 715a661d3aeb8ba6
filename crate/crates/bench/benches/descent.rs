use std::f64::consts::TAU;
use std::ops::ControlFlow;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use elastica_bench::ellipse;
use elastica_core::elastica::closure_functional;
use elastica_core::{
    discrete_energy, exact_gradient, initial_step, pendulum_period, run, sample_figure_eight, step_from,
    DescentParams,
};

fn descent_step(c: &mut Criterion) {
    let params = DescentParams::default();
    let mut group = c.benchmark_group("step");
    for n in [64usize, 100, 400] {
        let start = initial_step(&ellipse(n)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &start, |b, s| {
            b.iter(|| step_from(black_box(s), &params).unwrap())
        });
    }
    group.finish();
}

fn energy_and_gradient(c: &mut Criterion) {
    let curve = ellipse(100);
    c.bench_function("discrete_energy/100", |b| b.iter(|| discrete_energy(black_box(&curve)).unwrap()));
    c.bench_function("exact_gradient/100", |b| b.iter(|| exact_gradient(black_box(&curve)).unwrap()));
}

fn short_run(c: &mut Criterion) {
    let params = DescentParams {
        max_iters: 1000,
        ..DescentParams::default()
    };
    let curve = ellipse(100);
    c.bench_function("run/1000_steps", |b| {
        b.iter(|| run(black_box(&curve), &params, |_| ControlFlow::Continue(())).unwrap())
    });
}

fn analytic(c: &mut Criterion) {
    c.bench_function("pendulum_period", |b| b.iter(|| pendulum_period(black_box(2.2813)).unwrap()));
    c.bench_function("closure_functional", |b| b.iter(|| closure_functional(black_box(2.2813)).unwrap()));
    c.bench_function("sample_figure_eight/200", |b| {
        b.iter(|| sample_figure_eight(1, black_box(200), TAU).unwrap())
    });
}

criterion_group!(benches, descent_step, energy_and_gradient, short_run, analytic);
criterion_main!(benches);
