//! Compares the data-parallel and sequential sweep paths on a realistic
//! workload: build a realization from random parameters, check its
//! realizability conditions, and extract the parameters back.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qlin::parallel::{map_items, map_items_seq};
use qlin::parameterization::{build_from_hgamma, extract_hgamma};
use qlin::random::{random_dims, random_hgamma, rng_from_seed};
use qlin::realizability::check_pr_blockwise;
use qlin::structured::Tolerance;

fn sweep_item(seed: u64) -> bool {
    let tol = Tolerance::default();
    let mut rng = rng_from_seed(seed);
    let dims = loop {
        let d = random_dims(&mut rng, 4, 3);
        if d.n() <= 4 {
            break d;
        }
    };
    let p = random_hgamma(&mut rng, dims);
    let k = build_from_hgamma(&p).unwrap();
    let pr = check_pr_blockwise(&k, &tol).unwrap();
    let q = extract_hgamma(&k, &tol).unwrap();
    pr.passed && q.dims == dims
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("realizability_sweep");
    for &n in &[64usize, 256] {
        let seeds: Vec<u64> = (0..n as u64).collect();
        group.bench_with_input(BenchmarkId::new("parallel", n), &seeds, |b, seeds| {
            b.iter(|| map_items(seeds.clone(), sweep_item))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &seeds, |b, seeds| {
            b.iter(|| map_items_seq(seeds.clone(), sweep_item))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
