use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use foodchain::{simulate_ensemble, simulate_path, FoodChain, NoiseModel, RawChain, SimConfig};
use std::hint::black_box;

fn chain3() -> FoodChain {
    FoodChain::new(&RawChain {
        n: 3,
        a10: 2.0,
        a11: 1.0,
        death: vec![0.2, 0.3],
        prey_on: vec![1.0, 1.0],
        preyed_by: vec![1.0, 1.0],
    })
    .unwrap()
}

fn bench_paths(c: &mut Criterion) {
    let chain = chain3();
    let noise = NoiseModel::diagonal(&[0.05, 0.05, 0.05]).unwrap();
    let cfg = SimConfig::new(vec![1.0; 3], 10.0, 1);

    let mut group = c.benchmark_group("log_em");
    group.throughput(Throughput::Elements(10_000));
    group.bench_function("path_10k_steps", |b| {
        b.iter(|| simulate_path(black_box(&chain), black_box(&noise), black_box(&cfg)).unwrap())
    });
    group.throughput(Throughput::Elements(80_000));
    group.bench_function("ensemble_8x10k_steps", |b| {
        b.iter(|| {
            simulate_ensemble(black_box(&chain), black_box(&noise), black_box(&cfg), 8).unwrap()
        })
    });
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_paths
}
criterion_main!(benches);
