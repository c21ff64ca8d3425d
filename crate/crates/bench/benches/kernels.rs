use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use loclab_bench::{lmc_fixture, random_matrix};
use loclab_core::capacity::{rho_min_with, LpArithmetic};
use loclab_core::linalg::BitMatrix;
use loclab_core::FieldSpec;

fn rank(c: &mut Criterion) {
    let gf2 = FieldSpec::prime(2).unwrap();
    let gf256 = FieldSpec::new(2, 8).unwrap();
    let mut group = c.benchmark_group("rank");
    for size in [32, 128, 512] {
        let m = random_matrix(&gf2, size, size, 1);
        group.bench_with_input(BenchmarkId::new("gf2_dense", size), &m, |b, m| b.iter(|| black_box(m.rank())));
        let bits = BitMatrix::from_mat(&m);
        group.bench_with_input(BenchmarkId::new("gf2_packed", size), &bits, |b, m| {
            b.iter(|| black_box(m.rank()))
        });
    }
    for size in [32, 128] {
        let m = random_matrix(&gf256, size, size, 2);
        group.bench_with_input(BenchmarkId::new("gf256", size), &m, |b, m| b.iter(|| black_box(m.rank())));
    }
    group.finish();
}

fn rho_lp(c: &mut Criterion) {
    let mut group = c.benchmark_group("rho_min");
    group.sample_size(20);
    for n_star in [6, 12] {
        group.bench_with_input(BenchmarkId::new("exact", n_star), &n_star, |b, &n| {
            b.iter(|| black_box(rho_min_with(3.0, n, LpArithmetic::Exact).unwrap().rho_min))
        });
    }
    for n_star in [12, 50, 200] {
        group.bench_with_input(BenchmarkId::new("float", n_star), &n_star, |b, &n| {
            b.iter(|| black_box(rho_min_with(3.0, n, LpArithmetic::Float).unwrap().rho_min))
        });
    }
    group.finish();
}

fn lmc_decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("lmc_decode");
    for n in [8, 16, 64] {
        let fx = lmc_fixture(n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &fx, |b, fx| {
            b.iter(|| black_box(fx.code.decode(&fx.received).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, rank, rho_lp, lmc_decode);
criterion_main!(benches);
