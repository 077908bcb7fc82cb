use std::hint::black_box;

use codemix::langid::{self, LidConfig};
use codemix::models::cnn::{self, CnnConfig, CnnNet, Vocab};
use codemix::models::{train_linear, LinearTextConfig};
use codemix::TransliterationTable;
use codemix_bench::{romanized_words, separable_splits};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn transliteration(c: &mut Criterion) {
    let table = TransliterationTable::bundled();
    let words = romanized_words(1000);
    let mut g = c.benchmark_group("translit");
    g.throughput(Throughput::Elements(words.len() as u64));
    g.bench_function("rules_1000_words", |b| {
        b.iter(|| {
            for w in &words {
                black_box(table.transliterate_word(w).unwrap());
            }
        })
    });
    g.finish();
}

fn lid_features(c: &mut Criterion) {
    let cfg = LidConfig::default();
    let words = romanized_words(1000);
    let mut g = c.benchmark_group("lid");
    g.throughput(Throughput::Elements(words.len() as u64));
    g.bench_function("featurize_1000_tokens", |b| {
        b.iter(|| {
            for w in &words {
                black_box(langid::featurize(w, &cfg));
            }
        })
    });
    g.finish();
}

fn linear_training(c: &mut Criterion) {
    let splits = separable_splits(250);
    let cfg = LinearTextConfig { bucket_count: 1 << 16, epochs: 5, ..Default::default() };
    let mut g = c.benchmark_group("linear");
    g.sample_size(10);
    g.bench_function("train_500_items_5_epochs", |b| b.iter(|| black_box(train_linear(&splits, &cfg).unwrap())));
    g.finish();
}

fn cnn_step(c: &mut Criterion) {
    let splits = separable_splits(50);
    let cfg = CnnConfig::default();
    let vocab = Vocab::build(splits.train.iter().map(|t| t.text.as_str()), cfg.max_vocab);
    let batch = cnn::encode_items(&vocab, &splits.train[..cfg.batch_size], cfg.sequence_length);
    let net = CnnNet::new(&cfg, vocab.len(), &mut ChaCha8Rng::seed_from_u64(1));
    let mut grad = vec![0.0; net.param_count()];
    let mut g = c.benchmark_group("cnn");
    g.sample_size(10);
    g.bench_function("forward_batch_32", |b| b.iter(|| black_box(net.batch_loss(&batch))));
    g.bench_function("forward_backward_batch_32", |b| {
        b.iter_batched(
            || ChaCha8Rng::seed_from_u64(2),
            |mut rng| black_box(net.loss_and_grad(&batch, Some(&mut rng), &mut grad)),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, transliteration, lid_features, linear_training, cnn_step);
criterion_main!(benches);
