//! Convolutional text classifier trained from scratch.
//!
//! token ids -> embedding -> `conv_layers` x (valid 1-D convolution, ReLU)
//! -> max over time -> dense(ReLU, dropout) -> dense -> softmax.
//! All parameters live in one flat vector; [`Layout`] gives the offsets.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_trainable, evaluate_split, EpochRecord, ModelError, TextSplits};
use crate::bag::{log_sum_exp, softmax};
use crate::corpus::Task;

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
const CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub sequence_length: usize,
    pub embedding_dim: usize,
    pub conv_layers: usize,
    pub filters: usize,
    pub kernel_width: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    /// Including the pad and unknown entries.
    pub max_vocab: usize,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig::for_task(Task::Sarcasm)
    }
}

impl CnnConfig {
    /// Sarcasm: 3 convolution layers, dropout 0.1. Hate speech: 4 and 0.2.
    pub fn for_task(task: Task) -> Self {
        let (conv_layers, dropout) = match task {
            Task::Sarcasm => (3, 0.1),
            Task::HateSpeech => (4, 0.2),
        };
        CnnConfig {
            sequence_length: 100,
            embedding_dim: 300,
            conv_layers,
            filters: 128,
            kernel_width: 3,
            hidden: 128,
            dropout,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 10,
            patience: 3,
            max_vocab: 20_000,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.kernel_width == 0 || self.sequence_length < self.kernel_width {
            return bad(format!(
                "sequence_length {} is shorter than kernel width {}",
                self.sequence_length, self.kernel_width
            ));
        }
        if self.conv_layers == 0 || self.output_length() == 0 {
            return bad(format!(
                "{} convolution layers of width {} leave no positions from length {}",
                self.conv_layers, self.kernel_width, self.sequence_length
            ));
        }
        if self.embedding_dim == 0 || self.filters == 0 || self.hidden == 0 || self.batch_size == 0 || self.epochs == 0 {
            return bad("dimensions, batch size and epochs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.max_vocab < 3 {
            return bad("max_vocab must leave room for at least one word".into());
        }
        if !(self.learning_rate > 0.0 && (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("invalid optimizer settings".into());
        }
        Ok(())
    }

    /// Time steps left after the last convolution.
    pub fn output_length(&self) -> usize {
        let shrink = self.conv_layers * (self.kernel_width.saturating_sub(1));
        self.sequence_length.saturating_sub(shrink)
    }
}

/// Token vocabulary: id 0 is padding, id 1 unknown, then training words by
/// descending frequency, ties broken alphabetically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<'a>(texts: impl Iterator<Item = &'a str>, max_size: usize) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in texts {
            for w in t.split_whitespace() {
                *counts.entry(w.to_lowercase()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut words = vec!["<pad>".to_string(), "<unk>".to_string()];
        words.extend(ranked.into_iter().take(max_size.saturating_sub(2)).map(|(w, _)| w));
        Self::from_words(words)
    }

    pub fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().skip(2).map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 2
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK_ID)
    }

    /// Ids of the lowercased tokens, truncated or padded to `len`.
    pub fn encode(&self, text: &str, len: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = text.split_whitespace().take(len).map(|w| self.id(&w.to_lowercase())).collect();
        ids.resize(len, PAD_ID);
        ids
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub vocab: usize,
    pub dim: usize,
    pub seq: usize,
    pub kernel: usize,
    pub filters: usize,
    pub hidden: usize,
    /// (weight offset, bias offset, input channels) per convolution.
    pub conv: Vec<(usize, usize, usize)>,
    pub dense1_w: usize,
    pub dense1_b: usize,
    pub dense2_w: usize,
    pub dense2_b: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &CnnConfig, vocab: usize) -> Self {
        let (dim, k, f, h) = (cfg.embedding_dim, cfg.kernel_width, cfg.filters, cfg.hidden);
        let mut off = vocab * dim;
        let mut conv = Vec::with_capacity(cfg.conv_layers);
        for l in 0..cfg.conv_layers {
            let c_in = if l == 0 { dim } else { f };
            let w = off;
            off += f * k * c_in;
            conv.push((w, off, c_in));
            off += f;
        }
        let dense1_w = off;
        let dense1_b = dense1_w + h * f;
        let dense2_w = dense1_b + h;
        let dense2_b = dense2_w + CLASSES * h;
        Layout {
            vocab,
            dim,
            seq: cfg.sequence_length,
            kernel: k,
            filters: f,
            hidden: h,
            conv,
            dense1_w,
            dense1_b,
            dense2_w,
            dense2_b,
            total: dense2_b + CLASSES,
        }
    }

    /// (name, rows, cols, offset) of every tensor, in storage order.
    pub fn tensors(&self) -> Vec<(String, usize, usize, usize)> {
        let mut out = vec![("embedding".to_string(), self.vocab, self.dim, 0)];
        for (l, &(w, b, c_in)) in self.conv.iter().enumerate() {
            out.push((format!("conv{l}.weight"), self.filters, self.kernel * c_in, w));
            out.push((format!("conv{l}.bias"), 1, self.filters, b));
        }
        out.push(("dense1.weight".into(), self.hidden, self.filters, self.dense1_w));
        out.push(("dense1.bias".into(), 1, self.hidden, self.dense1_b));
        out.push(("dense2.weight".into(), CLASSES, self.hidden, self.dense2_w));
        out.push(("dense2.bias".into(), 1, CLASSES, self.dense2_b));
        out
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorize.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..n {
        s += a[j] * b[j];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Intermediate values of one forward pass.
struct Trace {
    /// acts[0] is the embedded input, acts[l + 1] the ReLU output of
    /// convolution l; each is time-major.
    acts: Vec<Vec<f64>>,
    lens: Vec<usize>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    z1: Vec<f64>,
    /// Dropout multiplier per hidden unit (0 or 1/(1-p); 1 without dropout).
    mask: Vec<f64>,
    a1: Vec<f64>,
    logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnNet {
    pub config: CnnConfig,
    pub layout: Layout,
    pub params: Vec<f64>,
}

impl CnnNet {
    /// Embedding rows uniform in ±0.05 (pad row zero), Glorot-uniform
    /// weights, zero biases.
    pub fn new<R: Rng>(cfg: &CnnConfig, vocab: usize, rng: &mut R) -> Self {
        let layout = Layout::new(cfg, vocab);
        let mut params = vec![0.0; layout.total];
        for v in &mut params[layout.dim..vocab * layout.dim] {
            *v = rng.gen_range(-0.05..0.05);
        }
        let mut glorot = |params: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in params {
                *v = rng.gen_range(-limit..limit);
            }
        };
        let (k, f, h) = (layout.kernel, layout.filters, layout.hidden);
        for &(w, b, c_in) in &layout.conv {
            glorot(&mut params[w..b], k * c_in, k * f);
        }
        glorot(&mut params[layout.dense1_w..layout.dense1_b], f, h);
        glorot(&mut params[layout.dense2_w..layout.dense2_b], h, CLASSES);
        CnnNet { config: cfg.clone(), layout, params }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn forward<R: Rng>(&self, params: &[f64], ids: &[usize], dropout: Option<&mut R>) -> Trace {
        let ly = &self.layout;
        let (dim, k, f, h) = (ly.dim, ly.kernel, ly.filters, ly.hidden);
        let mut x = vec![0.0; ids.len() * dim];
        for (t, &id) in ids.iter().enumerate() {
            x[t * dim..(t + 1) * dim].copy_from_slice(&params[id * dim..(id + 1) * dim]);
        }
        let mut acts = vec![x];
        let mut lens = vec![ids.len()];
        for &(w_off, b_off, c_in) in &ly.conv {
            let input = acts.last().expect("non-empty");
            let t_in = *lens.last().expect("non-empty");
            let t_out = t_in + 1 - k;
            let mut out = vec![0.0; t_out * f];
            let window = k * c_in;
            for t in 0..t_out {
                let win = &input[t * c_in..t * c_in + window];
                for j in 0..f {
                    let w = &params[w_off + j * window..w_off + (j + 1) * window];
                    out[t * f + j] = (params[b_off + j] + dot(w, win)).max(0.0);
                }
            }
            acts.push(out);
            lens.push(t_out);
        }
        let last = acts.last().expect("non-empty");
        let t_last = *lens.last().expect("non-empty");
        let mut pooled = vec![f64::NEG_INFINITY; f];
        let mut argmax = vec![0; f];
        for t in 0..t_last {
            for j in 0..f {
                if last[t * f + j] > pooled[j] {
                    pooled[j] = last[t * f + j];
                    argmax[j] = t;
                }
            }
        }
        let z1: Vec<f64> = (0..h)
            .map(|i| params[ly.dense1_b + i] + dot(&params[ly.dense1_w + i * f..ly.dense1_w + (i + 1) * f], &pooled))
            .collect();
        let p = self.config.dropout;
        let mask: Vec<f64> = match dropout {
            Some(rng) if p > 0.0 => (0..h).map(|_| if rng.gen::<f64>() < p { 0.0 } else { 1.0 / (1.0 - p) }).collect(),
            _ => vec![1.0; h],
        };
        let a1: Vec<f64> = z1.iter().zip(&mask).map(|(z, m)| z.max(0.0) * m).collect();
        let logits: Vec<f64> = (0..CLASSES)
            .map(|c| params[ly.dense2_b + c] + dot(&params[ly.dense2_w + c * h..ly.dense2_w + (c + 1) * h], &a1))
            .collect();
        Trace { acts, lens, pooled, argmax, z1, mask, a1, logits }
    }

    /// Adds `scale` times the gradient of the example loss to `grad`;
    /// returns the unscaled loss.
    fn backward(&self, params: &[f64], ids: &[usize], target: usize, tr: &Trace, scale: f64, grad: &mut [f64]) -> f64 {
        let ly = &self.layout;
        let (dim, k, f, h) = (ly.dim, ly.kernel, ly.filters, ly.hidden);
        let loss = log_sum_exp(&tr.logits) - tr.logits[target];
        let mut dlogits = softmax(&tr.logits);
        dlogits[target] -= 1.0;
        dlogits.iter_mut().for_each(|d| *d *= scale);

        let mut da1 = vec![0.0; h];
        for (c, &dc) in dlogits.iter().enumerate() {
            grad[ly.dense2_b + c] += dc;
            axpy(dc, &tr.a1, &mut grad[ly.dense2_w + c * h..ly.dense2_w + (c + 1) * h]);
            axpy(dc, &params[ly.dense2_w + c * h..ly.dense2_w + (c + 1) * h], &mut da1);
        }
        let mut dpooled = vec![0.0; f];
        for i in 0..h {
            let dz = if tr.z1[i] > 0.0 { da1[i] * tr.mask[i] } else { 0.0 };
            if dz == 0.0 {
                continue;
            }
            grad[ly.dense1_b + i] += dz;
            axpy(dz, &tr.pooled, &mut grad[ly.dense1_w + i * f..ly.dense1_w + (i + 1) * f]);
            axpy(dz, &params[ly.dense1_w + i * f..ly.dense1_w + (i + 1) * f], &mut dpooled);
        }

        let n_layers = ly.conv.len();
        let mut dout = vec![0.0; tr.lens[n_layers] * f];
        for j in 0..f {
            dout[tr.argmax[j] * f + j] = dpooled[j];
        }
        for l in (0..n_layers).rev() {
            let (w_off, b_off, c_in) = ly.conv[l];
            let window = k * c_in;
            let out = &tr.acts[l + 1];
            let input = &tr.acts[l];
            let mut din = vec![0.0; tr.lens[l] * c_in];
            for t in 0..tr.lens[l + 1] {
                for j in 0..f {
                    let g = if out[t * f + j] > 0.0 { dout[t * f + j] } else { 0.0 };
                    if g == 0.0 {
                        continue;
                    }
                    grad[b_off + j] += g;
                    let win = t * c_in..t * c_in + window;
                    axpy(g, &input[win.clone()], &mut grad[w_off + j * window..w_off + (j + 1) * window]);
                    axpy(g, &params[w_off + j * window..w_off + (j + 1) * window], &mut din[win]);
                }
            }
            dout = din;
        }
        for (t, &id) in ids.iter().enumerate() {
            if id != PAD_ID {
                axpy(1.0, &dout[t * dim..(t + 1) * dim], &mut grad[id * dim..(id + 1) * dim]);
            }
        }
        loss
    }

    pub fn probabilities(&self, ids: &[usize]) -> Vec<f64> {
        softmax(&self.forward::<ChaCha8Rng>(&self.params, ids, None).logits)
    }

    /// Mean loss over a batch without dropout, at `params`.
    pub fn batch_loss_at(&self, params: &[f64], batch: &[(Vec<usize>, usize)]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|(ids, y)| {
                let logits = self.forward::<ChaCha8Rng>(params, ids, None).logits;
                log_sum_exp(&logits) - logits[*y]
            })
            .sum();
        total / batch.len() as f64
    }

    pub fn batch_loss(&self, batch: &[(Vec<usize>, usize)]) -> f64 {
        self.batch_loss_at(&self.params, batch)
    }

    /// Mean loss and its gradient over a batch. Dropout masks are drawn
    /// from `dropout` when given.
    pub fn loss_and_grad<R: Rng>(&self, batch: &[(Vec<usize>, usize)], mut dropout: Option<&mut R>, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for (ids, y) in batch {
            let tr = self.forward(&self.params, ids, dropout.as_deref_mut());
            total += self.backward(&self.params, ids, *y, &tr, scale, grad);
        }
        let dim = self.layout.dim;
        grad[PAD_ID * dim..(PAD_ID + 1) * dim].iter_mut().for_each(|g| *g = 0.0);
        total * scale
    }

    /// Mean batch loss at `params` (no dropout) together with the
    /// activation pattern: ReLU on/off bits and pooling positions, which
    /// identify the linear piece of the network `params` lies on.
    pub fn loss_and_pattern(&self, params: &[f64], batch: &[(Vec<usize>, usize)]) -> (f64, Vec<u64>) {
        let mut sig = Vec::new();
        let mut total = 0.0;
        for (ids, y) in batch {
            let tr = self.forward::<ChaCha8Rng>(params, ids, None);
            total += log_sum_exp(&tr.logits) - tr.logits[*y];
            let mut bits = 0u64;
            let mut n = 0;
            let mut push = |on: bool, sig: &mut Vec<u64>| {
                bits = (bits << 1) | on as u64;
                n += 1;
                if n == 64 {
                    sig.push(bits);
                    bits = 0;
                    n = 0;
                }
            };
            for a in &tr.acts[1..] {
                for &v in a {
                    push(v > 0.0, &mut sig);
                }
            }
            for &z in &tr.z1 {
                push(z > 0.0, &mut sig);
            }
            sig.push(bits);
            sig.extend(tr.argmax.iter().map(|&t| t as u64));
        }
        (total / batch.len() as f64, sig)
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(cfg: &CnnConfig, params: usize) -> Self {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            step: 0,
            m: vec![0.0; params],
            v: vec![0.0; params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub vocab: Vocab,
    pub net: CnnNet,
    pub history: Vec<EpochRecord>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
}

impl CnnModel {
    pub fn config(&self) -> &CnnConfig {
        &self.net.config
    }

    /// `None` for input without tokens.
    pub fn probabilities(&self, text: &str) -> Option<Vec<f64>> {
        text_probabilities(&self.vocab, &self.net, text)
    }
}

fn text_probabilities(vocab: &Vocab, net: &CnnNet, text: &str) -> Option<Vec<f64>> {
    if text.split_whitespace().next().is_none() {
        return None;
    }
    Some(net.probabilities(&vocab.encode(text, net.config.sequence_length)))
}

pub fn encode_items(vocab: &Vocab, items: &[super::LabeledText], len: usize) -> Vec<(Vec<usize>, usize)> {
    items.iter().map(|it| (vocab.encode(&it.text, len), it.label as usize)).collect()
}

/// Adam over shuffled mini-batches; after each epoch the validation F1 is
/// measured and training stops once it has not improved for `patience`
/// epochs. The weights of the best epoch are returned.
pub fn train_cnn(splits: &TextSplits, cfg: &CnnConfig) -> Result<CnnModel, ModelError> {
    cfg.validate()?;
    check_trainable(splits)?;
    let vocab = Vocab::build(splits.train.iter().map(|t| t.text.as_str()), cfg.max_vocab);
    let train = encode_items(&vocab, &splits.train, cfg.sequence_length);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = CnnNet::new(cfg, vocab.len(), &mut rng);
    let mut adam = Adam::new(cfg, net.param_count());
    let mut grad = vec![0.0; net.param_count()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(Vec<usize>, usize)> = chunk.iter().map(|&i| train[i].clone()).collect();
            loss_sum += net.loss_and_grad(&batch, Some(&mut rng), &mut grad) * batch.len() as f64;
            adam.step(&mut net.params, &grad);
            let dim = net.layout.dim;
            net.params[PAD_ID * dim..(PAD_ID + 1) * dim].iter_mut().for_each(|v| *v = 0.0);
        }
        if !net.all_finite() {
            return Err(ModelError::Diverged);
        }
        let probs: Vec<Option<Vec<f64>>> = splits.val.iter().map(|it| text_probabilities(&vocab, &net, &it.text)).collect();
        let (val_loss, m) = evaluate_split(&probs, &splits.val)?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            val_f1: m.f1,
            val_accuracy: m.accuracy,
        });
        log::info!("cnn epoch {epoch}: val f1 {:.4} acc {:.4}", m.f1, m.accuracy);
        if best.as_ref().is_none_or(|(f1, _, _)| m.f1 > *f1) {
            best = Some((m.f1, epoch, net.params.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    net.params = params;
    Ok(CnnModel { vocab, net, history, best_epoch })
}
