//! Token-level language identification.
//!
//! Pattern overrides decide hashtags, mentions, punctuation, links, numbers,
//! emoji and Devanagari-script tokens outright. Everything else goes to a
//! hashed character n-gram classifier trained on gold-tagged tokens.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bag::{argmax, decayed_lr, BagClassifier};
use crate::corpus::{Corpus, LanguageTag, Token, TokenKind, Utterance};
use crate::features::CharNgrams;
use crate::io::{self, BinaryError};
use crate::translit::is_devanagari;

pub const LID_MAGIC: &[u8; 6] = b"CSLID1";
const LID_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LidError {
    #[error("invalid identifier config: {0}")]
    Config(String),
    #[error("training data contains no gold-tagged word tokens")]
    NoTrainingData,
    #[error("training data has a single distinct tag ({0}); need at least two")]
    SingleTag(LanguageTag),
    #[error(transparent)]
    Binary(#[from] BinaryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidConfig {
    pub char_ngram_min: usize,
    pub char_ngram_max: usize,
    pub include_whole_token: bool,
    pub embedding_dim: usize,
    pub bucket_count: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LidConfig {
    fn default() -> Self {
        LidConfig {
            char_ngram_min: 2,
            char_ngram_max: 5,
            include_whole_token: true,
            embedding_dim: 16,
            bucket_count: 1 << 20,
            epochs: 10,
            learning_rate: 0.1,
            seed: 42,
        }
    }
}

impl LidConfig {
    pub fn validate(&self) -> Result<(), LidError> {
        if !(1 <= self.char_ngram_min && self.char_ngram_min <= self.char_ngram_max && self.char_ngram_max <= 8) {
            return Err(LidError::Config(format!(
                "need 1 <= char_ngram_min <= char_ngram_max <= 8, got {}..{}",
                self.char_ngram_min, self.char_ngram_max
            )));
        }
        if self.embedding_dim == 0 {
            return Err(LidError::Config("embedding_dim must be at least 1".into()));
        }
        if !self.bucket_count.is_power_of_two() {
            return Err(LidError::Config(format!("bucket_count {} is not a power of two", self.bucket_count)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LidError::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn char_ngrams(&self) -> CharNgrams {
        CharNgrams {
            min: self.char_ngram_min,
            max: self.char_ngram_max,
            whole_token: self.include_whole_token,
            bucket_count: self.bucket_count,
        }
    }
}

/// Hashed character n-gram ids of a token, by position then n-gram length,
/// followed by the whole-token id when enabled.
pub fn featurize(token_text: &str, cfg: &LidConfig) -> Vec<usize> {
    cfg.char_ngrams().ids(token_text)
}

/// Anything that assigns probabilities over `[hi, en, other]` to a token
/// text.
pub trait TokenScorer {
    fn probabilities(&self, text: &str) -> [f64; 3];
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidModel {
    pub config: LidConfig,
    pub(crate) net: BagClassifier,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

impl TokenScorer for LidModel {
    fn probabilities(&self, text: &str) -> [f64; 3] {
        let p = self.net.probabilities(&featurize(text, &self.config));
        [p[0], p[1], p[2]]
    }
}

impl LidModel {
    pub fn label_order() -> [LanguageTag; 3] {
        LanguageTag::ALL
    }

    pub fn classifier(&self) -> &BagClassifier {
        &self.net
    }

    pub fn is_finite(&self) -> bool {
        self.net.all_finite()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), LidError> {
        w.write_all(LID_MAGIC).map_err(BinaryError::from)?;
        io::write_u32(&mut w, LID_VERSION)?;
        let meta = serde_json::json!({
            "config": self.config,
            "labels": LanguageTag::ALL.iter().map(|l| l.as_str()).collect::<Vec<_>>(),
            "loss_history": self.loss_history,
        });
        io::write_block(&mut w, meta.to_string().as_bytes())?;
        let init = BagClassifier::seeded(self.net.buckets, self.net.dim, 3, self.config.seed);
        io::write_row_delta(&mut w, self.net.buckets, self.net.dim, &self.net.input, &init.input)?;
        io::write_matrix(&mut w, self.net.labels, self.net.dim, &self.net.output)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<LidModel, LidError> {
        io::expect_magic(&mut r, LID_MAGIC)?;
        let version = io::read_u32(&mut r)?;
        if version != LID_VERSION {
            return Err(BinaryError::Version(version).into());
        }
        let meta: serde_json::Value = serde_json::from_slice(&io::read_block(&mut r)?).map_err(BinaryError::from)?;
        let config: LidConfig = serde_json::from_value(meta["config"].clone()).map_err(BinaryError::from)?;
        let labels: Vec<String> = serde_json::from_value(meta["labels"].clone()).map_err(BinaryError::from)?;
        if labels != ["hi", "en", "other"] {
            return Err(BinaryError::Corrupt(format!("unexpected label order {labels:?}")).into());
        }
        let loss_history: Vec<f64> = serde_json::from_value(meta["loss_history"].clone()).unwrap_or_default();
        config.validate()?;
        let (rows, cols) = (config.bucket_count, config.embedding_dim);
        let init = BagClassifier::seeded(rows, cols, 3, config.seed);
        let input = io::read_row_delta(&mut r, rows, cols, init.input)?;
        let (orows, ocols, output) = io::read_matrix(&mut r)?;
        if orows != 3 || ocols != cols {
            return Err(BinaryError::Corrupt("weight shapes disagree with config".into()).into());
        }
        Ok(LidModel { config, net: BagClassifier::from_parts(rows, cols, 3, input, output), loss_history })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), LidError> {
        let f = std::fs::File::create(path).map_err(BinaryError::from)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush().map_err(BinaryError::from)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<LidModel, LidError> {
        let f = std::fs::File::open(path).map_err(BinaryError::from)?;
        LidModel::read_from(std::io::BufReader::new(f))
    }
}

/// Tokens the classifier is responsible for: everything not decided by a
/// pattern override.
pub fn needs_model(token: &Token) -> bool {
    token.kind == TokenKind::Word && !is_devanagari(&token.text)
}

/// Trains the identifier on gold-tagged word tokens.
pub fn train_lid(corpus: &Corpus, cfg: &LidConfig) -> Result<LidModel, LidError> {
    cfg.validate()?;
    let ngrams = cfg.char_ngrams();
    let mut samples: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut seen = [false; 3];
    for token in corpus.tokens() {
        if !needs_model(token) {
            continue;
        }
        if let Some(tag) = token.lang {
            seen[tag.index()] = true;
            samples.push((ngrams.ids(&token.text.to_lowercase()), tag.index()));
        }
    }
    if samples.is_empty() {
        return Err(LidError::NoTrainingData);
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        let only = LanguageTag::from_index(seen.iter().position(|&s| s).unwrap_or(0)).unwrap_or(LanguageTag::Hindi);
        return Err(LidError::SingleTag(only));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = BagClassifier::new(cfg.bucket_count, cfg.embedding_dim, 3, &mut rng);
    let total_steps = cfg.epochs * samples.len();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut step = 0;
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (feats, target) = &samples[i];
            total += net.sgd_step(feats, *target, decayed_lr(cfg.learning_rate, step, total_steps));
            step += 1;
        }
        let mean = total / samples.len() as f64;
        log::info!("lid epoch {}/{}: mean loss {mean:.5}", epoch + 1, cfg.epochs);
        loss_history.push(mean);
    }
    Ok(LidModel { config: cfg.clone(), net, loss_history })
}

/// Predicted tag and its confidence for one token.
pub fn predict_token_with<S: TokenScorer + ?Sized>(scorer: &S, token: &Token) -> (LanguageTag, f64) {
    if token.kind != TokenKind::Word {
        return (LanguageTag::Other, 1.0);
    }
    if is_devanagari(&token.text) {
        return (LanguageTag::Hindi, 1.0);
    }
    let probs = scorer.probabilities(&token.text.to_lowercase());
    let best = argmax(&probs);
    (LanguageTag::ALL[best], probs[best])
}

pub fn predict_token(model: &LidModel, token: &Token) -> (LanguageTag, f64) {
    predict_token_with(model, token)
}

/// Fills in every missing tag; gold tags are left as they are.
pub fn tag_corpus_with<S: TokenScorer + ?Sized>(scorer: &S, corpus: &Corpus) -> Corpus {
    let utterances = corpus
        .utterances
        .iter()
        .map(|u| Utterance {
            id: u.id.clone(),
            label: u.label,
            tokens: u
                .tokens
                .iter()
                .map(|t| match t.lang {
                    Some(_) => t.clone(),
                    None => Token { lang: Some(predict_token_with(scorer, t).0), ..t.clone() },
                })
                .collect(),
        })
        .collect();
    Corpus { name: corpus.name.clone(), task: corpus.task, utterances, label_names: corpus.label_names.clone() }
}

pub fn tag_corpus(model: &LidModel, corpus: &Corpus) -> Corpus {
    tag_corpus_with(model, corpus)
}

/// Token accuracy of `model` against gold tags (tokens without a gold tag
/// are skipped).
pub fn token_accuracy<S: TokenScorer + ?Sized>(scorer: &S, corpus: &Corpus) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for t in corpus.tokens() {
        if let Some(gold) = t.lang {
            total += 1;
            if predict_token_with(scorer, t).0 == gold {
                correct += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Task;
    use std::cell::Cell;

    struct Counting<'a> {
        inner: &'a LidModel,
        calls: Cell<usize>,
    }

    impl TokenScorer for Counting<'_> {
        fn probabilities(&self, text: &str) -> [f64; 3] {
            self.calls.set(self.calls.get() + 1);
            self.inner.probabilities(text)
        }
    }

    fn small_cfg() -> LidConfig {
        LidConfig { bucket_count: 1 << 12, epochs: 5, ..LidConfig::default() }
    }

    fn tiny_corpus() -> Corpus {
        let words = [
            ("yaar", LanguageTag::Hindi),
            ("kya", LanguageTag::Hindi),
            ("hai", LanguageTag::Hindi),
            ("movie", LanguageTag::English),
            ("the", LanguageTag::English),
            ("good", LanguageTag::English),
            ("#tag", LanguageTag::Other),
        ];
        let tokens = words.iter().map(|(w, l)| Token::new(*w, Some(*l))).collect();
        Corpus::new("t", Task::Sarcasm, vec![Utterance { id: "a".into(), tokens, label: 0 }]).unwrap()
    }

    #[test]
    fn featurize_counts() {
        let cfg = LidConfig { char_ngram_min: 2, char_ngram_max: 2, include_whole_token: false, ..small_cfg() };
        assert_eq!(featurize("ab", &cfg).len(), 3);
        let cfg = LidConfig { char_ngram_min: 2, char_ngram_max: 3, include_whole_token: false, ..small_cfg() };
        assert_eq!(featurize("a", &cfg).len(), 3);
        assert_eq!(featurize("namaste", &cfg), featurize("namaste", &cfg));
    }

    #[test]
    fn config_validation() {
        assert!(LidConfig::default().validate().is_ok());
        assert!(LidConfig { char_ngram_min: 0, ..small_cfg() }.validate().is_err());
        assert!(LidConfig { char_ngram_max: 9, ..small_cfg() }.validate().is_err());
        assert!(LidConfig { char_ngram_min: 4, char_ngram_max: 3, ..small_cfg() }.validate().is_err());
        assert!(LidConfig { embedding_dim: 0, ..small_cfg() }.validate().is_err());
        assert!(LidConfig { bucket_count: 1000, ..small_cfg() }.validate().is_err());
    }

    #[test]
    fn single_tag_rejected() {
        let tokens = vec![Token::new("yaar", Some(LanguageTag::Hindi)), Token::new("#x", None)];
        let c = Corpus::new("t", Task::Sarcasm, vec![Utterance { id: "a".into(), tokens, label: 0 }]).unwrap();
        assert!(matches!(train_lid(&c, &small_cfg()), Err(LidError::SingleTag(LanguageTag::Hindi))));
    }

    #[test]
    fn overrides_skip_the_model() {
        let model = train_lid(&tiny_corpus(), &small_cfg()).unwrap();
        let counting = Counting { inner: &model, calls: Cell::new(0) };
        for text in ["#sarcasm", "@user", "!!", "http://t.co/x", "2020", "😂"] {
            let t = Token::new(text, None);
            assert_eq!(predict_token_with(&counting, &t), (LanguageTag::Other, 1.0), "{text}");
        }
        assert_eq!(predict_token_with(&counting, &Token::new("यार", None)), (LanguageTag::Hindi, 1.0));
        assert_eq!(counting.calls.get(), 0);
        predict_token_with(&counting, &Token::new("yaar", None));
        assert_eq!(counting.calls.get(), 1);
    }

    #[test]
    fn softmax_sums_to_one() {
        let model = train_lid(&tiny_corpus(), &small_cfg()).unwrap();
        for w in ["yaar", "zzz", "a", "hello"] {
            let p = model.probabilities(w);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let a = train_lid(&tiny_corpus(), &small_cfg()).unwrap();
        let b = train_lid(&tiny_corpus(), &small_cfg()).unwrap();
        assert_eq!(a.net.input, b.net.input);
        assert_eq!(a.net.output, b.net.output);
        assert!(a.is_finite());
    }

    #[test]
    fn tagging_fills_only_missing_tags() {
        let model = train_lid(&tiny_corpus(), &small_cfg()).unwrap();
        let gold = tiny_corpus();
        assert_eq!(tag_corpus(&model, &gold), gold);

        let tokens = vec![Token::new("yaar", None), Token::new("movie", Some(LanguageTag::Hindi)), Token::new("@x", None)];
        let c = Corpus::new("t", Task::Sarcasm, vec![Utterance { id: "a".into(), tokens, label: 1 }]).unwrap();
        let tagged = tag_corpus(&model, &c);
        assert!(tagged.tokens().all(|t| t.lang.is_some()));
        assert_eq!(tagged.utterances[0].tokens[1].lang, Some(LanguageTag::Hindi));
        assert_eq!(tag_corpus(&model, &tagged), tagged);

        let mentions = vec![Token::new("@a", None), Token::new("@b", None)];
        let c = Corpus::new("m", Task::Sarcasm, vec![Utterance { id: "m".into(), tokens: mentions, label: 0 }]).unwrap();
        assert!(tag_corpus(&model, &c).tokens().all(|t| t.lang == Some(LanguageTag::Other)));
    }

    #[test]
    fn binary_round_trip() {
        let model = train_lid(&tiny_corpus(), &small_cfg()).unwrap();
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..6], b"CSLID1");
        let back = LidModel::read_from(&buf[..]).unwrap();
        assert!(back == model, "round trip changed the model");
        buf[0] = b'X';
        assert!(LidModel::read_from(&buf[..]).is_err());
    }
}
