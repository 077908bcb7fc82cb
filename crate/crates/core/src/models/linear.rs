//! Bag-of-n-grams linear text classifier and its seeded random search.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_trainable, evaluate_split, EpochRecord, LabeledText, ModelError, TextSplits};
use crate::bag::{decayed_lr, BagClassifier};
use crate::features::{word_ngram_id, CharNgrams};

pub const DIM_CHOICES: [usize; 3] = [10, 50, 100];
pub const EPOCH_RANGE: (usize, usize) = (5, 50);
pub const LR_RANGE: (f64, f64) = (0.05, 1.0);
pub const WORD_NGRAM_RANGE: (usize, usize) = (1, 3);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTextConfig {
    pub word_ngram_max: usize,
    /// Character n-grams of each word; `char_ngram_max == 0` disables them.
    pub char_ngram_min: usize,
    pub char_ngram_max: usize,
    pub embedding_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Power of two.
    pub bucket_count: usize,
    pub seed: u64,
}

impl Default for LinearTextConfig {
    fn default() -> Self {
        LinearTextConfig {
            word_ngram_max: 2,
            char_ngram_min: 2,
            char_ngram_max: 5,
            embedding_dim: 50,
            epochs: 10,
            learning_rate: 0.2,
            bucket_count: 1 << 18,
            seed: 42,
        }
    }
}

impl LinearTextConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if !(WORD_NGRAM_RANGE.0..=WORD_NGRAM_RANGE.1).contains(&self.word_ngram_max) {
            return bad(format!("word_ngram_max {} outside 1..=3", self.word_ngram_max));
        }
        if !DIM_CHOICES.contains(&self.embedding_dim) {
            return bad(format!("embedding_dim {} not one of {DIM_CHOICES:?}", self.embedding_dim));
        }
        if !(EPOCH_RANGE.0..=EPOCH_RANGE.1).contains(&self.epochs) {
            return bad(format!("epochs {} outside 5..=50", self.epochs));
        }
        if !(LR_RANGE.0..=LR_RANGE.1).contains(&self.learning_rate) {
            return bad(format!("learning_rate {} outside [0.05, 1.0]", self.learning_rate));
        }
        if !self.bucket_count.is_power_of_two() {
            return bad(format!("bucket_count {} is not a power of two", self.bucket_count));
        }
        if self.char_ngram_max > 0 && (self.char_ngram_min == 0 || self.char_ngram_min > self.char_ngram_max) {
            return bad("char n-gram range must satisfy 1 <= min <= max".into());
        }
        Ok(())
    }

    fn char_ngrams(&self) -> CharNgrams {
        let (min, max) = if self.char_ngram_max == 0 { (1, 0) } else { (self.char_ngram_min, self.char_ngram_max) };
        CharNgrams { min, max, whole_token: true, bucket_count: self.bucket_count }
    }
}

/// Lowercased whitespace tokens.
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Bucket ids: per word its character n-grams and whole-word id, then word
/// n-grams of order 2..=word_ngram_max.
pub fn text_features(text: &str, cfg: &LinearTextConfig) -> Vec<usize> {
    let ws = words(text);
    let grams = cfg.char_ngrams();
    let mut ids = Vec::new();
    for w in &ws {
        grams.push_ids(w, &mut ids);
    }
    let refs: Vec<&str> = ws.iter().map(String::as_str).collect();
    for n in 2..=cfg.word_ngram_max {
        for window in refs.windows(n) {
            ids.push(word_ngram_id(window, cfg.bucket_count));
        }
    }
    ids
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub config: LinearTextConfig,
    pub net: BagClassifier,
    pub history: Vec<EpochRecord>,
}

impl LinearModel {
    pub fn probabilities(&self, text: &str) -> Option<Vec<f64>> {
        let feats = text_features(text, &self.config);
        (!feats.is_empty()).then(|| self.net.probabilities(&feats))
    }
}

fn featurize(items: &[LabeledText], cfg: &LinearTextConfig) -> Vec<(Vec<usize>, usize)> {
    items.iter().map(|it| (text_features(&it.text, cfg), it.label as usize)).collect()
}

/// Per-example SGD over shuffled training items with linear learning-rate
/// decay; validation metrics are recorded after every epoch.
pub fn train_linear(splits: &TextSplits, cfg: &LinearTextConfig) -> Result<LinearModel, ModelError> {
    cfg.validate()?;
    check_trainable(splits)?;
    let train: Vec<_> = featurize(&splits.train, cfg).into_iter().filter(|(f, _)| !f.is_empty()).collect();
    let val = featurize(&splits.val, cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = BagClassifier::new(cfg.bucket_count, cfg.embedding_dim, 2, &mut rng);
    let total = cfg.epochs * train.len();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let (feats, target) = &train[i];
            loss_sum += net.sgd_step(feats, *target, decayed_lr(cfg.learning_rate, step, total));
            step += 1;
        }
        let probs: Vec<Option<Vec<f64>>> =
            val.iter().map(|(f, _)| (!f.is_empty()).then(|| net.probabilities(f))).collect();
        let (val_loss, m) = evaluate_split(&probs, &splits.val)?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len().max(1) as f64,
            val_loss,
            val_f1: m.f1,
            val_accuracy: m.accuracy,
        });
    }
    if !net.all_finite() {
        return Err(ModelError::Diverged);
    }
    Ok(LinearModel { config: cfg.clone(), net, history })
}

/// Draws one configuration from the search space. Character n-gram
/// settings, bucket count and seed are taken from `base`.
pub fn sample_config<R: Rng>(rng: &mut R, base: &LinearTextConfig) -> LinearTextConfig {
    LinearTextConfig {
        word_ngram_max: rng.gen_range(WORD_NGRAM_RANGE.0..=WORD_NGRAM_RANGE.1),
        embedding_dim: DIM_CHOICES[rng.gen_range(0..DIM_CHOICES.len())],
        epochs: rng.gen_range(EPOCH_RANGE.0..=EPOCH_RANGE.1),
        learning_rate: rng.gen_range(LR_RANGE.0..=LR_RANGE.1),
        ..base.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: LinearTextConfig,
    pub val_f1: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutotuneResult {
    pub best: LinearTextConfig,
    pub best_index: usize,
    pub model: LinearModel,
    pub trials: Vec<Trial>,
}

/// Seeded random search. Trial `i` uses the `i`-th draw from a stream
/// seeded by `budget_seed`, so a shorter search is a prefix of a longer
/// one. The first trial reaching the highest final validation F1 wins.
pub fn autotune_linear(
    splits: &TextSplits,
    trials: usize,
    budget_seed: u64,
    base: &LinearTextConfig,
) -> Result<AutotuneResult, ModelError> {
    if trials < 1 {
        return Err(ModelError::Config("autotune needs at least one trial".into()));
    }
    check_trainable(splits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget_seed);
    let mut best: Option<(usize, LinearModel)> = None;
    let mut records = Vec::with_capacity(trials);
    for i in 0..trials {
        let cfg = sample_config(&mut rng, base);
        let model = train_linear(splits, &cfg)?;
        let last = model.history.last().expect("at least one epoch");
        records.push(Trial { config: cfg, val_f1: last.val_f1, val_accuracy: last.val_accuracy });
        log::info!("trial {}/{trials}: val f1 {:.4}", i + 1, last.val_f1);
        let better = match &best {
            None => true,
            Some((_, b)) => last.val_f1 > b.history.last().expect("at least one epoch").val_f1,
        };
        if better {
            best = Some((i, model));
        }
    }
    let (best_index, model) = best.expect("trials >= 1");
    Ok(AutotuneResult { best: model.config.clone(), best_index, model, trials: records })
}
