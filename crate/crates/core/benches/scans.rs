use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dirichlet_core::bisector::{bmap, numeric_rank};
use dirichlet_core::domain::{compute_domain, DomainOptions};
use dirichlet_core::group::GroupPresentation;
use dirichlet_core::isometry::{boost, make_loxodromic, Isometry};
use dirichlet_core::lorentz::{sample_klein, Vector};
use dirichlet_core::par;

fn rank_scan(tuple: &[&Isometry], n: usize) -> usize {
    par::map_range(n, |i| {
        let mut rng = par::stream(7, i as u64);
        let x = sample_klein(&mut rng, 3, 0.9);
        numeric_rank(&bmap(tuple, &x), 1e-8)
    })
    .into_iter()
    .filter(|&r| r == 3)
    .count()
}

fn domain_batch(g: &GroupPresentation, n: usize) -> usize {
    let opts = DomainOptions::default();
    par::map_range(n, |i| {
        let mut rng = par::stream(11, i as u64);
        let x = sample_klein(&mut rng, 3, 0.8);
        compute_domain(g, &x, &opts).map_or(0, |d| d.facet_count())
    })
    .into_iter()
    .sum()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("1 thread", rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool")),
        ("default", rayon::ThreadPoolBuilder::new().build().expect("pool")),
    ]
}

fn scans(c: &mut Criterion) {
    let a = boost(3, 1, 2.0);
    let b = boost(3, 2, 2.0);
    let ab = a.compose(&b);
    let tuple = [&a, &b, &ab];

    let ep = Vector::from_column_slice(&[1.0, 1.0, 0.0, 0.0]);
    let em = Vector::from_column_slice(&[1.0, -1.0, 0.0, 0.0]);
    let lox = make_loxodromic(&ep, &em, 0.9, 1.1).expect("loxodromic");
    let cyclic = GroupPresentation::from_pairs(vec![("a", lox)]).expect("group");

    let mut group = c.benchmark_group("rank_scan_10k");
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &pool, |bch, pool| {
            bch.iter(|| pool.install(|| rank_scan(&tuple, 10_000)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("cyclic_domains_32");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &pool, |bch, pool| {
            bch.iter(|| pool.install(|| domain_batch(&cyclic, 32)))
        });
    }
    group.finish();
}

criterion_group!(benches, scans);
criterion_main!(benches);
