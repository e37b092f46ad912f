use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use spin_bench::{gamma_sample, lower_endpoint_problem, normal_sample};
use spin_core::empirical::empirical_shortest;
use spin_core::moments::Kde;
use spin_core::qp::solve;
use spin_core::spin::{spin_interval, SpinConfig};

fn empirical(c: &mut Criterion) {
    let mut group = c.benchmark_group("empirical_shortest");
    for n in [500, 5000] {
        let s = normal_sample(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| empirical_shortest(black_box(s), 0.05).unwrap())
        });
    }
    group.finish();
}

fn kde(c: &mut Criterion) {
    let s = normal_sample(2000);
    let kde = Kde::new(&s).unwrap();
    c.bench_function("kde_density_and_slope/2000", |b| b.iter(|| kde.density_and_slope(black_box(1.9))));
}

fn qp(c: &mut Criterion) {
    let mut group = c.benchmark_group("qp_solve");
    for n in [300, 2000] {
        let p = lower_endpoint_problem(&normal_sample(n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| solve(black_box(p)).unwrap()));
    }
    group.finish();
}

fn spin(c: &mut Criterion) {
    let mut group = c.benchmark_group("spin_interval");
    group.sample_size(10);
    for n in [300, 1000] {
        let s = gamma_sample(n);
        let config = SpinConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| spin_interval(black_box(s), &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, empirical, kde, qp, spin);
criterion_main!(benches);
