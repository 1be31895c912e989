use std::collections::BTreeSet;
use std::hint::black_box;

use atomkg_core::eval::bootstrap_significance;
use atomkg_core::extraction::Triplet;
use atomkg_core::kg::{build_graph, infer_transitive, KnowledgeGraph};
use atomkg_core::logic::{is_atomic, Catalog, Formula, WorldSpace};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

criterion_group!(benches, catalog, atomicity, closure, bootstrap);
criterion_main!(benches);

/// Thread counts to compare. Sequential builds have a single mode.
#[cfg(feature = "parallel")]
fn modes() -> Vec<(String, Option<rayon::ThreadPool>)> {
    let n = std::thread::available_parallelism().map_or(1, |n| n.get());
    [1, n.max(2)]
        .into_iter()
        .map(|t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            (format!("threads-{t}"), Some(pool))
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(String, Option<()>)> {
    vec![("sequential".to_string(), None)]
}

#[cfg(feature = "parallel")]
fn run<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run<R>(_: &Option<()>, f: impl FnOnce() -> R) -> R {
    f()
}

fn catalog(c: &mut Criterion) {
    let space = WorldSpace::new(["x", "y", "z"]).unwrap();
    let mut group = c.benchmark_group("catalog_depth3");
    group.sample_size(10);
    for (name, pool) in modes() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| run(&pool, || Catalog::build(black_box(space.clone()), 3).unwrap().len()))
        });
    }
    group.finish();
}

fn atomicity(c: &mut Criterion) {
    // ten variables: 3^10 candidate clauses, none of which match
    let vars: Vec<String> = (0..10).map(|i| format!("v{i}")).collect();
    let clause = vars
        .iter()
        .map(|v| Formula::atom(v.as_str()))
        .reduce(Formula::or)
        .unwrap();
    let phi = Formula::and(clause, Formula::not(Formula::atom("v0")));
    let space = WorldSpace::new(vars.iter().map(String::as_str)).unwrap();
    let mut group = c.benchmark_group("is_atomic_10_vars");
    group.sample_size(10);
    for (name, pool) in modes() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| run(&pool, || is_atomic(black_box(&phi), &space).unwrap()))
        });
    }
    group.finish();
}

fn random_graph(nodes: usize, edges: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    let triplets: Vec<Triplet> = (0..edges)
        .map(|_| {
            let (s, o) = (rng.random_range(0..nodes), rng.random_range(0..nodes));
            Triplet::new(&format!("n{s}"), "part of", &format!("n{o}")).unwrap()
        })
        .collect();
    build_graph(&triplets)
}

fn closure(c: &mut Criterion) {
    let g = random_graph(300, 450, 7);
    let rels: BTreeSet<String> = ["part of".to_string()].into();
    let mut group = c.benchmark_group("closure_300_nodes");
    group.sample_size(10);
    for (name, pool) in modes() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| run(&pool, || infer_transitive(black_box(&g), &rels).edge_count()))
        });
    }
    group.finish();
}

fn bootstrap(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(3);
    let a: Vec<f64> = (0..500).map(|_| rng.random_bool(0.6) as u8 as f64).collect();
    let b: Vec<f64> = (0..500).map(|_| rng.random_bool(0.55) as u8 as f64).collect();
    let mut group = c.benchmark_group("bootstrap_10000");
    group.sample_size(10);
    for (name, pool) in modes() {
        group.bench_function(BenchmarkId::from_parameter(&name), |bench| {
            bench.iter(|| run(&pool, || bootstrap_significance(black_box(&a), &b, 10_000, 1).unwrap()))
        });
    }
    group.finish();
}
