use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use std::collections::BTreeSet;
use std::hint::black_box;

use dlmt_bench::{converged_message, scenario, topology};
use dlmt_core::oracle::{brute_force_dlmt, oracle_dlmt, SourceGraph};
use dlmt_core::sim::run;
use dlmt_core::wire::{decode_control, encode_control, HeaderFields};

fn protocol_run(c: &mut Criterion) {
    let mut g = c.benchmark_group("protocol_run");
    g.sample_size(20);
    for n in [8, 16, 32] {
        let s = scenario(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter_batched(|| s.clone(), |s| black_box(run(s).unwrap().metrics), BatchSize::SmallInput)
        });
    }
    g.finish();
}

fn oracles(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_dlmt");
    for n in [8, 32, 64] {
        let graph = SourceGraph::from_topology(&topology(n, 2), &BTreeSet::new());
        g.bench_with_input(BenchmarkId::from_parameter(n), &graph, |b, graph| {
            b.iter(|| black_box(oracle_dlmt(graph).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("brute_force_dlmt");
    g.sample_size(10);
    for n in [5, 6, 7] {
        let graph = SourceGraph::from_topology(&topology(n, 3), &BTreeSet::new());
        g.bench_with_input(BenchmarkId::from_parameter(n), &graph, |b, graph| {
            b.iter(|| black_box(brute_force_dlmt(graph).unwrap()))
        });
    }
    g.finish();
}

fn wire(c: &mut Criterion) {
    let msg = converged_message(32, 4);
    let bytes = encode_control(&msg, HeaderFields::default()).unwrap();
    let mut g = c.benchmark_group("wire");
    g.bench_function("encode_control_32", |b| {
        b.iter(|| black_box(encode_control(&msg, HeaderFields::default()).unwrap()))
    });
    g.bench_function("decode_control_32", |b| b.iter(|| black_box(decode_control(&bytes).unwrap())));
    g.finish();
}

criterion_group!(benches, protocol_run, oracles, wire);
criterion_main!(benches);
