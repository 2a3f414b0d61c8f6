use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nonabsolute::constraints::{max_over_rlf, max_over_rlf_with};
use nonabsolute::inequalities::{chained, lf_catalog_m3, mermin};
use nonabsolute::measures::{non_absoluteness_coefficient, non_absoluteness_fraction};
use nonabsolute::quantum::chained_behavior;
use nonabsolute::Rational;

fn catalog_bounds(c: &mut Criterion) {
    let catalog = lf_catalog_m3().unwrap();
    let eps = Rational::new(1, 4);
    c.bench_function("catalog relaxed bounds, exact", |b| {
        b.iter(|| {
            for ineq in &catalog {
                black_box(max_over_rlf(ineq, &ineq.scenario, &eps).unwrap());
            }
        })
    });
}

fn chained_bounds(c: &mut Criterion) {
    let mut group = c.benchmark_group("chained relaxed bound, exact");
    group.sample_size(10);
    for m in [3, 4, 5, 6] {
        let ineq = chained(m).unwrap();
        let eps = Rational::new(1, 8);
        group.bench_with_input(BenchmarkId::from_parameter(m), &ineq, |b, ineq| {
            b.iter(|| black_box(max_over_rlf(ineq, &ineq.scenario, &eps).unwrap()))
        });
    }
    group.finish();
}

fn mermin_bound(c: &mut Criterion) {
    let ineq = mermin().unwrap();
    let eps = Rational::new(1, 8);
    let mut group = c.benchmark_group("mermin relaxed bound");
    group.sample_size(10);
    group.bench_function("float", |b| {
        b.iter(|| {
            black_box(
                max_over_rlf_with::<f64>(&ineq, &ineq.scenario, &eps)
                    .unwrap()
                    .value,
            )
        })
    });
    group.finish();
}

fn quantum_measures(c: &mut Criterion) {
    let mut group = c.benchmark_group("quantum chained measures, float");
    group.sample_size(10);
    for m in [2, 4, 6] {
        let behavior = chained_behavior(m).unwrap();
        group.bench_with_input(BenchmarkId::new("fraction", m), &behavior, |b, p| {
            b.iter(|| black_box(non_absoluteness_fraction(p).unwrap().value))
        });
        group.bench_with_input(BenchmarkId::new("coefficient", m), &behavior, |b, p| {
            b.iter(|| black_box(non_absoluteness_coefficient(p).unwrap().value))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    catalog_bounds,
    chained_bounds,
    mermin_bound,
    quantum_measures
);
criterion_main!(benches);
