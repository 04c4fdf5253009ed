use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use moebiuskit::constructions::smooth_family;
use moebiuskit::strip_model::{validate_foliation_with, FoliationTolerances};
use moebiuskit::t_pattern::{find_t_pattern_with, SearchOptions};
use moebiuskit::verify::{grid_oracle, property_rng, ClosedScrew};
use moebiuskit::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn foliation(c: &mut Criterion) {
    let strip = smooth_family(0.1).expect("eps in range");
    let tol = FoliationTolerances::default();
    let mut group = c.benchmark_group("validate_foliation");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| validate_foliation_with(&strip, &tol, exec).expect("valid input"))
        });
    }
    group.finish();
}

fn t_pattern(c: &mut Criterion) {
    let strip = smooth_family(0.1).expect("eps in range");
    let mut group = c.benchmark_group("find_t_pattern");
    for (name, exec) in POLICIES {
        let opts = SearchOptions {
            exec,
            ..SearchOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| find_t_pattern_with(&strip, &opts).expect("pattern exists"))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let fam = ClosedScrew::random(&mut property_rng(1, "bench"));
    let mut group = c.benchmark_group("grid_oracle_1000");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| grid_oracle(|t| fam.line(t), 1000, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, foliation, t_pattern, oracle);
criterion_main!(benches);
