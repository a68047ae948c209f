//! Microbenchmarks over the reference machine models: zone-graph
//! construction, the symbolic checker (failing and passing runs), and the
//! discrete brute-force checker.

use criterion::{criterion_group, criterion_main, Criterion};

use tiocheck_core::*;

fn bench_zone_graph(c: &mut Criterion) {
    let machine = fixtures::machine();
    c.bench_function("build_iolzg machine", |b| {
        b.iter(|| build_iolzg(&machine, 20).unwrap().states.len())
    });
    let composed = compose(&fixtures::machine(), &fixtures::customer()).unwrap();
    c.bench_function("build_iolzg machine||customer", |b| {
        b.iter(|| build_iolzg(&composed, 20).unwrap().states.len())
    });
}

fn bench_symbolic_check(c: &mut Criterion) {
    c.bench_function("check machine vs variant (failing)", |b| {
        b.iter(|| {
            let im = build_iolzg(&fixtures::machine(), 20).unwrap();
            let sp = build_iolzg(&fixtures::machine_variant(), 20).unwrap();
            check(&im, &sp, &CheckConfig::default()).unwrap().pass
        })
    });
    c.bench_function("check f5_a3 self (passing)", |b| {
        b.iter(|| {
            let im = build_iolzg(&fixtures::f5_a3(), 5).unwrap();
            let sp = build_iolzg(&fixtures::f5_a3(), 5).unwrap();
            check(&im, &sp, &CheckConfig::default()).unwrap().pass
        })
    });
}

fn bench_oracle(c: &mut Criterion) {
    c.bench_function("oracle ltioco f5_a3 vs f5_a4", |b| {
        b.iter(|| {
            let cfg = OracleConfig {
                closed_only: false,
                ..OracleConfig::default()
            };
            let (im, sp) = build_pair(&fixtures::f5_a3(), &fixtures::f5_a4(), &cfg).unwrap();
            check_ltioco_s(&im, &sp, 4).unwrap().pass
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_zone_graph, bench_symbolic_check, bench_oracle
}
criterion_main!(benches);
