use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hypermatch::synthetic::{planted_corpus, PlantedSpec};
use hypermatch::{
    backward, distance_gradient, embed_corpus, evaluate, hyperbolic_distance, make_triples,
    pool_and_normalize, EvalSet, ModelConfig, ModelParams, Role, SplitRatios, TokenSequence,
    TrainConfig, TrainingSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| 0.8 * x / norm).collect()
}

fn geometry(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut group = c.benchmark_group("geometry");
    for d in [32, 128] {
        let q = point(&mut rng, d);
        let a = point(&mut rng, d);
        group.bench_with_input(BenchmarkId::new("distance", d), &d, |b, _| {
            b.iter(|| hyperbolic_distance(black_box(&q), black_box(&a)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gradient", d), &d, |b, _| {
            b.iter(|| distance_gradient(black_box(&q), black_box(&a), 1e-9).unwrap())
        });
    }
    group.finish();
}

fn pooling(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = ModelParams::init(768, 128, 1).unwrap();
    let data = (0..64 * 768)
        .map(|_| rng.random_range(-0.05..0.05))
        .collect();
    let seq = TokenSequence::new(Role::Answer, 768, data).unwrap();
    c.bench_function("pool_and_normalize 64x768 -> 128", |b| {
        b.iter(|| pool_and_normalize(&params, black_box(&seq), 1e-5).unwrap())
    });
}

fn training_and_eval(c: &mut Criterion) {
    let corpus = planted_corpus(&PlantedSpec::default(), 7);
    let (desc, code) = embed_corpus(&corpus, 64, 7).unwrap();
    let splits = make_triples(&corpus, SplitRatios::new(0.75, 0.0, 0.25).unwrap(), 7).unwrap();
    let model = ModelConfig::new(64, 32);
    let params = ModelParams::init(64, 32, 7).unwrap();

    let set = TrainingSet::from_stores(&splits.train, &desc, &code, &model).unwrap();
    let batch = set.batch();
    let cfg = TrainConfig::default();
    c.bench_function("backward 64 triples", |b| {
        b.iter(|| backward(&params, black_box(&batch[..64]), &cfg).unwrap())
    });

    let eval_set = EvalSet::from_ids(splits.test.qids(), &desc, &code, &model).unwrap();
    c.bench_function("evaluate 50 queries x 50 candidates", |b| {
        b.iter(|| evaluate(&params, black_box(&eval_set), 1e-5).unwrap())
    });
}

criterion_group!(benches, geometry, pooling, training_and_eval);
criterion_main!(benches);
