use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qim_bench::mt1_dataset;
use qim_core::active::select_batch;
use qim_core::learners::{train_gbt, train_rf, GbtParams, RfParams};
use qim_core::metrics::roc_auc;
use qim_core::AlConfig;

fn boosting(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_gbt");
    group.sample_size(10);
    for n in [100, 500, 1000] {
        let data = mt1_dataset(n / 2, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| {
            b.iter(|| train_gbt(d, &GbtParams::fixed(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap())
        });
    }
    group.finish();
}

fn forest(c: &mut Criterion) {
    let data = mt1_dataset(500, 3);
    let mut group = c.benchmark_group("train_rf");
    group.sample_size(10);
    group.bench_function("1000", |b| {
        b.iter(|| train_rf(&data, &RfParams::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap())
    });
    group.finish();
}

fn selection(c: &mut Criterion) {
    let train = mt1_dataset(100, 5);
    let pool = mt1_dataset(800, 6).features();
    let model = train_gbt(&train, &GbtParams::fixed(), &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let config = AlConfig::new(1000, 0);
    c.bench_function("select_batch_1600", |b| {
        b.iter(|| select_batch(&model, &pool, &config).unwrap())
    });
}

fn auc(c: &mut Criterion) {
    let data = mt1_dataset(2000, 8);
    let scores: Vec<f64> = data.features().iter().map(|f| f[0]).collect();
    let labels = data.labels();
    c.bench_function("roc_auc_4000", |b| b.iter(|| roc_auc(&scores, &labels).unwrap()));
}

criterion_group!(benches, boosting, forest, selection, auc);
criterion_main!(benches);
