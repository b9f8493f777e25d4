use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shrinklab_bench::{ellipse, torus};
use shrinklab_core::diagnostics::noncollapse_delta;
use shrinklab_core::flow::{stable_dt, step};
use shrinklab_core::spectral::{assemble_l, first_eigenpair};
use shrinklab_core::{FlowMode, GeometrySnapshot, ShrinkerSpec};
use std::hint::black_box;

fn shooting(c: &mut Criterion) {
    let mut g = c.benchmark_group("shooting");
    g.sample_size(10);
    for n in [512, 2048] {
        g.bench_with_input(BenchmarkId::new("angenent-torus", n), &n, |b, &n| {
            b.iter(|| ShrinkerSpec::angenent_torus(n).build().unwrap())
        });
        g.bench_with_input(BenchmarkId::new("abresch-langer-2-3", n), &n, |b, &n| {
            b.iter(|| ShrinkerSpec::abresch_langer(2, 3, n).build().unwrap())
        });
    }
    g.finish();
}

fn eigenpair(c: &mut Criterion) {
    let mut g = c.benchmark_group("first-eigenpair");
    g.sample_size(10);
    for n in [256, 512, 1024] {
        let geom = torus(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &geom, |b, geom| {
            b.iter(|| first_eigenpair(&assemble_l(geom).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn flow_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow-step");
    for n in [256, 1024, 4096] {
        let geom = ellipse(1.6, 1.1, n);
        g.bench_with_input(BenchmarkId::new("ellipse", n), &geom, |b, geom| {
            b.iter(|| {
                let dt = stable_dt(geom, FlowMode::Rmcf, 0.4);
                step(black_box(geom), FlowMode::Rmcf, dt).unwrap()
            })
        });
    }
    g.finish();
}

fn noncollapse(c: &mut Criterion) {
    let mut g = c.benchmark_group("noncollapse-delta");
    g.sample_size(20);
    for n in [256, 512] {
        // both rescaled mean convex
        let geom = ellipse(0.9, 0.6, n);
        g.bench_with_input(BenchmarkId::new("ellipse", n), &geom, |b, geom| b.iter(|| noncollapse_delta(geom).unwrap()));
        let geom = GeometrySnapshot::tube_profile(2.0, 0.6, n).unwrap();
        g.bench_with_input(BenchmarkId::new("tube", n), &geom, |b, geom| b.iter(|| noncollapse_delta(geom).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, shooting, eigenpair, flow_step, noncollapse);
criterion_main!(benches);
