use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cvqkd::collective::conditional_entropy_bound;
use cvqkd::discretization::joint_statistics;
use cvqkd::sim::{counting_enumeration, toeplitz_privacy_amplification, BitString};
use cvqkd::{BinningScheme, ScenarioModel};
use cvqkd_bench::headline_pair;
use rand::SeedableRng;

fn joint_tables(c: &mut Criterion) {
    let mut group = c.benchmark_group("joint_statistics");
    group.sample_size(10);
    let cov = headline_pair(0.0);
    for delta in [0.1, 0.05, 0.02] {
        let scheme = BinningScheme::finite(52.0, delta).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(delta), &scheme, |b, s| {
            b.iter(|| joint_statistics(black_box(cov), s).unwrap())
        });
    }
    group.finish();
}

fn entropy_bound(c: &mut Criterion) {
    let gamma = ScenarioModel::default().covariance().unwrap();
    let scheme = BinningScheme::infinite(0.02).unwrap();
    c.bench_function("conditional_entropy_bound", |b| {
        b.iter(|| conditional_entropy_bound(black_box(&gamma), &scheme).unwrap())
    });
}

fn toeplitz(c: &mut Criterion) {
    let mut group = c.benchmark_group("toeplitz");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for len in [1usize << 12, 1 << 16] {
        let raw = BitString::random(len, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(len), &raw, |b, raw| {
            b.iter(|| toeplitz_privacy_amplification(raw, len / 2, 7).unwrap())
        });
    }
    group.finish();
}

fn counting(c: &mut Criterion) {
    c.bench_function("counting_enumeration n=8 d0=2", |b| b.iter(|| counting_enumeration(black_box(8), 2.0).unwrap()));
}

criterion_group!(benches, joint_tables, entropy_bound, toeplitz, counting);
criterion_main!(benches);
