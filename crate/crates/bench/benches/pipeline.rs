use criterion::{criterion_group, criterion_main, Criterion};
use dynsim_bench::lorenz_pair;
use dynsim_core::embedding::EmbeddingParams;
use dynsim_core::{compare, ComparisonConfig};
use std::hint::black_box;

fn end_to_end(c: &mut Criterion) {
    let (x, y) = lorenz_pair(2000);
    let config = ComparisonConfig {
        embedding: Some(EmbeddingParams {
            delay_tau: 1,
            num_delays_mu: 10,
        }),
        ..ComparisonConfig::default()
    };
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("compare_lorenz_2000", |b| {
        b.iter(|| compare(black_box(&x), black_box(&y), &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, end_to_end);
criterion_main!(benches);
