//! Sequential vs. rayon-parallel timings for the data-parallel cores:
//! network construction, cluster-tree building, and the solver loop.
//!
//! Run with `cargo bench -p wsc-core`. With the `parallel` feature
//! disabled both variants collapse to the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use wsc_core::aco::{solve, AcoParams};
use wsc_core::cluster::ClusterTree;
use wsc_core::eval::{generate_dataset, Dataset, GenParams};
use wsc_core::exec::ExecMode;
use wsc_core::network::SemanticNetwork;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn dataset(n_services: usize, n_concepts: usize) -> Dataset {
    generate_dataset(&GenParams {
        n_services,
        n_concepts,
        seed: 7,
        ..GenParams::default()
    })
    .expect("benchmark dataset generates")
}

fn bench_network_build(c: &mut Criterion) {
    let data = dataset(300, 60);
    let mut group = c.benchmark_group("network_build_300");
    for (label, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, &mode| {
            b.iter(|| {
                black_box(SemanticNetwork::build(
                    &data.registry,
                    &data.ontology,
                    0.7,
                    mode,
                ))
            })
        });
    }
    group.finish();
}

fn bench_cluster_build(c: &mut Criterion) {
    let data = dataset(400, 90);
    let mut group = c.benchmark_group("cluster_build_400");
    group.sample_size(20);
    for (label, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, &mode| {
            b.iter(|| black_box(ClusterTree::build(&data.registry, &data.ontology, 10, mode)))
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let data = dataset(80, 36);
    let params = AcoParams {
        n_iterations: 40,
        seed: 3,
        ..AcoParams::default()
    };
    let net = SemanticNetwork::build(&data.registry, &data.ontology, params.theta_match, ExecMode::Parallel);
    let tree = ClusterTree::build(&data.registry, &data.ontology, 10, ExecMode::Parallel)
        .expect("benchmark tree builds");
    let mut group = c.benchmark_group("solve_80_services_40_iters");
    group.sample_size(20);
    for (label, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, &mode| {
            b.iter(|| {
                black_box(solve(
                    &net,
                    &tree,
                    &data.registry,
                    &data.ontology,
                    &data.requests[0],
                    &params,
                    mode,
                ))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_network_build, bench_cluster_build, bench_solve);
criterion_main!(benches);
