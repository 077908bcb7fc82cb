//! Native baseline text classifiers: a hashed bag-of-n-grams linear model
//! and a convolutional network, with a shared model container.

pub mod cnn;
pub mod linear;
pub mod synthetic;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cnn::{train_cnn, CnnConfig, CnnModel, CnnNet, Vocab};
pub use linear::{autotune_linear, train_linear, AutotuneResult, LinearModel, LinearTextConfig, Trial};

use crate::bag::BagClassifier;
use crate::corpus::{assign_parts, split_sizes, Corpus, SplitCorpus, SplitOptions};
use crate::eval::{confusion, metrics, EvalError, Metrics};
use crate::io::{self as bin, BinaryError};
use crate::pipeline::ConvertedCorpus;

pub const MODEL_MAGIC: &[u8; 6] = b"CSMDL1";
pub const MODEL_VERSION: u32 = 1;
/// Central-difference step of the gradient check.
pub const FD_STEP: f64 = 1e-5;
/// Coordinates compared per gradient check.
pub const GRADIENT_SAMPLE: usize = 200;
pub const MAX_PROBE: usize = 8;
/// Denominator floor of the relative error, so coordinates whose true
/// gradient is ~0 are judged on absolute error.
const RELATIVE_ERROR_FLOOR: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("{0} part is empty")]
    EmptyPart(&'static str),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("split references unknown id {0}")]
    UnknownId(String),
    #[error("training diverged (non-finite weights)")]
    Diverged,
    #[error("probe batch must hold 1 to 8 items, got {0}")]
    Probe(usize),
    #[error("model file: {0}")]
    Binary(#[from] BinaryError),
    #[error("bad split file {path}: {message}")]
    Records { path: String, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledText {
    pub id: String,
    pub text: String,
    pub label: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextSplits {
    pub train: Vec<LabeledText>,
    pub val: Vec<LabeledText>,
    pub test: Vec<LabeledText>,
}

fn pick<T>(ids: &[String], lookup: &HashMap<&str, T>, make: impl Fn(&T) -> LabeledText) -> Result<Vec<LabeledText>, ModelError> {
    ids.iter()
        .map(|id| lookup.get(id.as_str()).map(&make).ok_or_else(|| ModelError::UnknownId(id.clone())))
        .collect()
}

impl TextSplits {
    /// Raw utterance text, tokens joined by single spaces.
    pub fn from_corpus(corpus: &Corpus, split: &SplitCorpus) -> Result<Self, ModelError> {
        let by_id = corpus.index_by_id();
        let make = |u: &&crate::corpus::Utterance| LabeledText { id: u.id.clone(), text: u.text(), label: u.label };
        Ok(TextSplits {
            train: pick(&split.train, &by_id, make)?,
            val: pick(&split.val, &by_id, make)?,
            test: pick(&split.test, &by_id, make)?,
        })
    }

    /// Converted text; ids excluded during conversion are skipped.
    pub fn from_converted(cc: &ConvertedCorpus, split: &SplitCorpus) -> Result<Self, ModelError> {
        let by_id: HashMap<&str, _> = cc.utterances.iter().map(|u| (u.id.as_str(), u)).collect();
        let excluded: BTreeSet<&str> = cc.excluded.iter().map(|e| e.id.as_str()).collect();
        let make = |u: &&crate::pipeline::ConvertedUtterance| LabeledText { id: u.id.clone(), text: u.flat_text(), label: u.label };
        let keep = |ids: &[String]| -> Vec<String> { ids.iter().filter(|i| !excluded.contains(i.as_str())).cloned().collect() };
        Ok(TextSplits {
            train: pick(&keep(&split.train), &by_id, make)?,
            val: pick(&keep(&split.val), &by_id, make)?,
            test: pick(&keep(&split.test), &by_id, make)?,
        })
    }

    /// Reads `train.jsonl`, `val.jsonl` and `test.jsonl` records carrying
    /// `id`, `label` and `text`.
    pub fn read_exported(dir: &Path) -> Result<Self, ModelError> {
        let [train, val, test] = crate::pipeline::export_paths(dir).map(|p| read_text_records(&p));
        Ok(TextSplits { train: train?, val: val?, test: test? })
    }

    /// Partitions labeled items with the corpus split procedure.
    pub fn from_items(items: Vec<LabeledText>, opts: SplitOptions) -> Self {
        let (n_test, n_val) = split_sizes(items.len(), opts.test_frac, opts.val_frac);
        let labels: Vec<u8> = items.iter().map(|i| i.label).collect();
        let parts = assign_parts(&labels, n_test, n_val, opts);
        let mut out = TextSplits::default();
        for (item, part) in items.into_iter().zip(parts) {
            match part {
                0 => out.train.push(item),
                1 => out.val.push(item),
                _ => out.test.push(item),
            }
        }
        out
    }
}

pub fn read_text_records(path: &Path) -> Result<Vec<LabeledText>, ModelError> {
    let err = |message: String| ModelError::Records { path: path.display().to_string(), message };
    let src = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str::<LabeledText>(l).map_err(|e| err(format!("line {}: {e}", i + 1))))
        .collect()
}

pub(crate) fn check_trainable(splits: &TextSplits) -> Result<(), ModelError> {
    if splits.train.is_empty() {
        return Err(ModelError::EmptyPart("train"));
    }
    if splits.val.is_empty() {
        return Err(ModelError::EmptyPart("val"));
    }
    let first = splits.train[0].label;
    if splits.train.iter().all(|t| t.label == first) {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}

/// Mean cross-entropy and metrics of class probabilities against gold
/// labels. `None` (empty input) counts as the uniform distribution.
pub(crate) fn evaluate_split(probs: &[Option<Vec<f64>>], items: &[LabeledText]) -> Result<(f64, Metrics), ModelError> {
    let mut loss = 0.0;
    let mut preds = Vec::with_capacity(items.len());
    for (p, it) in probs.iter().zip(items) {
        let p = p.clone().unwrap_or_else(|| vec![0.5, 0.5]);
        loss -= p[it.label as usize].max(f64::MIN_POSITIVE).ln();
        preds.push(label_of(&p));
    }
    let golds: Vec<u8> = items.iter().map(|i| i.label).collect();
    let m = metrics(&confusion(&preds, &golds)?)?;
    Ok((loss / items.len() as f64, m))
}

/// Argmax with ties going to label 0.
fn label_of(probs: &[f64]) -> u8 {
    u8::from(probs[1] > probs[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Cnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Cnn => "cnn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "fasttext" | "ngram" => Ok(ModelKind::Linear),
            "cnn" => Ok(ModelKind::Cnn),
            _ => Err(format!("unknown model {s:?} (expected linear or cnn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "config", rename_all = "lowercase")]
pub enum ModelSpec {
    Linear(LinearTextConfig),
    Cnn(CnnConfig),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Linear(_) => ModelKind::Linear,
            ModelSpec::Cnn(_) => ModelKind::Cnn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    /// Probability of the positive class.
    pub score: f64,
    pub probabilities: [f64; 2],
    /// Set when the input had no features; label 0 and score 0.5 are
    /// returned in that case.
    pub empty_input: bool,
}

impl Prediction {
    fn from_probs(p: Option<Vec<f64>>) -> Self {
        match p {
            Some(p) => Prediction { label: label_of(&p), score: p[1], probabilities: [p[0], p[1]], empty_input: false },
            None => Prediction { label: 0, score: 0.5, probabilities: [0.5, 0.5], empty_input: true },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Linear(LinearModel),
    Cnn(CnnModel),
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    spec: ModelSpec,
    history: Vec<EpochRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocab: Option<Vec<String>>,
    #[serde(default)]
    best_epoch: usize,
}

pub fn train(spec: &ModelSpec, splits: &TextSplits) -> Result<TrainedModel, ModelError> {
    match spec {
        ModelSpec::Linear(cfg) => Ok(TrainedModel::Linear(train_linear(splits, cfg)?)),
        ModelSpec::Cnn(cfg) => Ok(TrainedModel::Cnn(train_cnn(splits, cfg)?)),
    }
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec().kind()
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            TrainedModel::Linear(m) => ModelSpec::Linear(m.config.clone()),
            TrainedModel::Cnn(m) => ModelSpec::Cnn(m.net.config.clone()),
        }
    }

    pub fn history(&self) -> &[EpochRecord] {
        match self {
            TrainedModel::Linear(m) => &m.history,
            TrainedModel::Cnn(m) => &m.history,
        }
    }

    pub fn predict(&self, text: &str) -> Prediction {
        Prediction::from_probs(match self {
            TrainedModel::Linear(m) => m.probabilities(text),
            TrainedModel::Cnn(m) => m.probabilities(text),
        })
    }

    pub fn predict_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Prediction {
        let text = tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        self.predict(&text)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), ModelError> {
        w.write_all(MODEL_MAGIC).map_err(BinaryError::from)?;
        bin::write_u32(&mut w, MODEL_VERSION)?;
        let meta = ModelMeta {
            spec: self.spec(),
            history: self.history().to_vec(),
            vocab: match self {
                TrainedModel::Cnn(m) => Some(m.vocab.words.clone()),
                TrainedModel::Linear(_) => None,
            },
            best_epoch: match self {
                TrainedModel::Cnn(m) => m.best_epoch,
                TrainedModel::Linear(m) => m.history.len(),
            },
        };
        bin::write_block(&mut w, &serde_json::to_vec(&meta).map_err(BinaryError::from)?)?;
        match self {
            TrainedModel::Linear(m) => {
                let net = &m.net;
                let init = BagClassifier::seeded(net.buckets(), net.dim(), net.labels(), m.config.seed);
                bin::write_row_delta(&mut w, net.buckets(), net.dim(), net.input_weights(), init.input_weights())?;
                bin::write_matrix(&mut w, net.labels(), net.dim(), net.output_weights())?;
            }
            TrainedModel::Cnn(m) => {
                for (_, rows, cols, off) in m.net.layout.tensors() {
                    bin::write_matrix(&mut w, rows, cols, &m.net.params[off..off + rows * cols])?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ModelError> {
        bin::expect_magic(&mut r, MODEL_MAGIC)?;
        let version = bin::read_u32(&mut r)?;
        if version != MODEL_VERSION {
            return Err(BinaryError::Version(version).into());
        }
        let meta: ModelMeta = serde_json::from_slice(&bin::read_block(&mut r)?).map_err(BinaryError::from)?;
        let corrupt = |m: String| ModelError::Binary(BinaryError::Corrupt(m));
        match meta.spec {
            ModelSpec::Linear(config) => {
                config.validate()?;
                let (buckets, dim) = (config.bucket_count, config.embedding_dim);
                let init = BagClassifier::seeded(buckets, dim, 2, config.seed);
                let input = bin::read_row_delta(&mut r, buckets, dim, init.input)?;
                let (labels, dim2, output) = bin::read_matrix(&mut r)?;
                if dim2 != dim || labels != 2 {
                    return Err(corrupt("linear weight shapes disagree with config".into()));
                }
                let net = BagClassifier::from_parts(buckets, dim, labels, input, output);
                Ok(TrainedModel::Linear(LinearModel { config, net, history: meta.history }))
            }
            ModelSpec::Cnn(config) => {
                let words = meta.vocab.ok_or_else(|| corrupt("cnn model without vocabulary".into()))?;
                let vocab = Vocab::from_words(words);
                let layout = cnn::Layout::new(&config, vocab.len());
                let mut params = vec![0.0; layout.total];
                for (name, rows, cols, off) in layout.tensors() {
                    let (r_, c_, data) = bin::read_matrix(&mut r)?;
                    if (r_, c_) != (rows, cols) {
                        return Err(corrupt(format!("{name}: expected {rows}x{cols}, found {r_}x{c_}")));
                    }
                    params[off..off + rows * cols].copy_from_slice(&data);
                }
                let net = CnnNet { config, layout, params };
                Ok(TrainedModel::Cnn(CnnModel { vocab, net, history: meta.history, best_epoch: meta.best_epoch }))
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        bin::write_atomic(path, &self.to_bytes()).map_err(|e| ModelError::Binary(BinaryError::Io(e)))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let f = std::fs::File::open(path).map_err(BinaryError::from)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Coordinates compared.
    pub checked: usize,
    /// Sampled coordinates skipped because the finite-difference stencil
    /// crossed a ReLU or max-pool switch.
    pub skipped: usize,
}

/// |a - n| / max(|a|, |n|, floor).
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares analytic gradients of the mean probe loss with central finite
/// differences on up to [`GRADIENT_SAMPLE`] coordinates drawn from the
/// parameters the probe can reach. Weights are drawn from the model's
/// initializer, then the output layer (linear) or biases (CNN) are
/// randomized so every coordinate is checked at a generic point. Dropout
/// is off.
pub fn gradient_check(spec: &ModelSpec, probe: &[LabeledText], seed: u64) -> Result<GradientCheck, ModelError> {
    if probe.is_empty() || probe.len() > MAX_PROBE {
        return Err(ModelError::Probe(probe.len()));
    }
    match spec {
        ModelSpec::Linear(cfg) => gradient_check_linear(cfg, probe, seed),
        ModelSpec::Cnn(cfg) => gradient_check_cnn(cfg, probe, seed),
    }
}

fn gradient_check_linear(cfg: &LinearTextConfig, probe: &[LabeledText], seed: u64) -> Result<GradientCheck, ModelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = BagClassifier::new(cfg.bucket_count, cfg.embedding_dim, 2, &mut rng);
    let bound = 1.0 / cfg.embedding_dim as f64;
    for i in 0..net.output_weights().len() {
        *net.param_mut(net.input_weights().len() + i) = rng.gen_range(-bound..bound);
    }
    let items: Vec<(Vec<usize>, usize)> = probe
        .iter()
        .map(|it| (linear::text_features(&it.text, cfg), it.label as usize))
        .filter(|(f, _)| !f.is_empty())
        .collect();
    if items.is_empty() {
        return Err(ModelError::Probe(0));
    }
    let dim = cfg.embedding_dim;
    let n_input = net.input_weights().len();
    let scale = 1.0 / items.len() as f64;
    let mut analytic: HashMap<usize, f64> = HashMap::new();
    let mut out_grad = vec![0.0; net.output_weights().len()];
    for (feats, y) in &items {
        let g = net.gradient(feats, *y);
        let inv = scale / feats.len() as f64;
        for &f in feats {
            for j in 0..dim {
                *analytic.entry(f * dim + j).or_insert(0.0) += g.hidden[j] * inv;
            }
        }
        for (o, d) in out_grad.iter_mut().zip(&g.output) {
            *o += d * scale;
        }
    }
    let mut active: Vec<usize> = analytic.keys().copied().collect();
    active.sort_unstable();
    for (i, &d) in out_grad.iter().enumerate() {
        analytic.insert(n_input + i, d);
        active.push(n_input + i);
    }
    let mean_loss = |net: &BagClassifier| items.iter().map(|(f, y)| net.loss(f, *y)).sum::<f64>() * scale;

    let mut max_err: f64 = 0.0;
    let picks = sample(&mut rng, active.len(), GRADIENT_SAMPLE.min(active.len()));
    for k in picks.iter() {
        let i = active[k];
        let old = net.param(i);
        *net.param_mut(i) = old + FD_STEP;
        let lp = mean_loss(&net);
        *net.param_mut(i) = old - FD_STEP;
        let lm = mean_loss(&net);
        *net.param_mut(i) = old;
        let numeric = (lp - lm) / (2.0 * FD_STEP);
        max_err = max_err.max(relative_error(analytic[&i], numeric));
    }
    Ok(GradientCheck { max_relative_error: max_err, checked: picks.len(), skipped: 0 })
}

fn gradient_check_cnn(cfg: &CnnConfig, probe: &[LabeledText], seed: u64) -> Result<GradientCheck, ModelError> {
    cfg.validate()?;
    let vocab = Vocab::build(probe.iter().map(|t| t.text.as_str()), cfg.max_vocab);
    let batch = cnn::encode_items(&vocab, probe, cfg.sequence_length);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = CnnNet::new(cfg, vocab.len(), &mut rng);
    let ly = net.layout.clone();
    let mut biases: Vec<usize> = ly.conv.iter().flat_map(|&(_, b, _)| b..b + ly.filters).collect();
    biases.extend(ly.dense1_b..ly.dense1_b + ly.hidden);
    biases.extend(ly.dense2_b..ly.dense2_b + 2);
    for i in biases {
        net.params[i] = rng.gen_range(-0.1..0.1);
    }
    let mut grad = vec![0.0; net.param_count()];
    net.loss_and_grad::<ChaCha8Rng>(&batch, None, &mut grad);

    let present: BTreeSet<usize> = batch.iter().flat_map(|(ids, _)| ids.iter().copied()).filter(|&id| id != cnn::PAD_ID).collect();
    let mut active: Vec<usize> = present.iter().flat_map(|&id| id * ly.dim..(id + 1) * ly.dim).collect();
    active.extend(ly.vocab * ly.dim..ly.total);

    let mut params = std::mem::take(&mut net.params);
    let (_, base_pattern) = net.loss_and_pattern(&params, &batch);
    let order = sample(&mut rng, active.len(), active.len());
    let (mut checked, mut skipped, mut max_err) = (0, 0, 0.0f64);
    for k in order.iter() {
        if checked == GRADIENT_SAMPLE {
            break;
        }
        let i = active[k];
        let old = params[i];
        params[i] = old + FD_STEP;
        let (lp, pp) = net.loss_and_pattern(&params, &batch);
        params[i] = old - FD_STEP;
        let (lm, pm) = net.loss_and_pattern(&params, &batch);
        params[i] = old;
        if pp != base_pattern || pm != base_pattern {
            skipped += 1;
            continue;
        }
        let numeric = (lp - lm) / (2.0 * FD_STEP);
        max_err = max_err.max(relative_error(grad[i], numeric));
        checked += 1;
    }
    Ok(GradientCheck { max_relative_error: max_err, checked, skipped })
}
