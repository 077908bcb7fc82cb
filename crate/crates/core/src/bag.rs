//! Averaged-embedding linear softmax over hashed feature ids.
//!
//! This is the shared core of the token language identifier and the
//! bag-of-n-grams text baseline: an input embedding table indexed by
//! feature bucket, mean-pooled into a hidden vector, followed by a linear
//! output layer and a softmax over the labels. Training is plain SGD on the
//! cross-entropy loss with a linearly decaying learning rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BagClassifier {
    pub(crate) buckets: usize,
    pub(crate) dim: usize,
    pub(crate) labels: usize,
    /// buckets x dim, row-major
    pub(crate) input: Vec<f64>,
    /// labels x dim, row-major
    pub(crate) output: Vec<f64>,
}

/// Gradient of the loss for one example.
#[derive(Debug, Clone)]
pub struct BagGradient {
    pub loss: f64,
    /// Gradient w.r.t. the hidden vector; each feature occurrence receives
    /// `hidden / n_features`.
    pub hidden: Vec<f64>,
    /// labels x dim
    pub output: Vec<f64>,
}

impl BagClassifier {
    /// Input rows uniform in (-1/dim, 1/dim), output layer zero.
    pub fn new<R: Rng>(buckets: usize, dim: usize, labels: usize, rng: &mut R) -> Self {
        let bound = 1.0 / dim as f64;
        let input = (0..buckets * dim).map(|_| rng.gen_range(-bound..bound)).collect();
        BagClassifier { buckets, dim, labels, input, output: vec![0.0; labels * dim] }
    }

    /// The state `new` draws from a fresh ChaCha8 stream seeded with `seed`.
    /// Trainers start from exactly this, so stored models only need the rows
    /// training touched.
    pub fn seeded(buckets: usize, dim: usize, labels: usize, seed: u64) -> Self {
        Self::new(buckets, dim, labels, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn from_parts(buckets: usize, dim: usize, labels: usize, input: Vec<f64>, output: Vec<f64>) -> Self {
        assert_eq!(input.len(), buckets * dim);
        assert_eq!(output.len(), labels * dim);
        BagClassifier { buckets, dim, labels, input, output }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output
    }

    pub fn param_count(&self) -> usize {
        self.input.len() + self.output.len()
    }

    /// Flat parameter access: input table first, then the output layer.
    pub fn param(&self, i: usize) -> f64 {
        if i < self.input.len() {
            self.input[i]
        } else {
            self.output[i - self.input.len()]
        }
    }

    pub fn param_mut(&mut self, i: usize) -> &mut f64 {
        let n = self.input.len();
        if i < n {
            &mut self.input[i]
        } else {
            &mut self.output[i - n]
        }
    }

    pub fn hidden(&self, feats: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        if feats.is_empty() {
            return h;
        }
        for &f in feats {
            let row = &self.input[f * self.dim..(f + 1) * self.dim];
            for (acc, w) in h.iter_mut().zip(row) {
                *acc += w;
            }
        }
        let inv = 1.0 / feats.len() as f64;
        h.iter_mut().for_each(|v| *v *= inv);
        h
    }

    fn logits(&self, h: &[f64]) -> Vec<f64> {
        self.output.chunks_exact(self.dim).map(|row| dot(row, h)).collect()
    }

    pub fn probabilities(&self, feats: &[usize]) -> Vec<f64> {
        softmax(&self.logits(&self.hidden(feats)))
    }

    pub fn loss(&self, feats: &[usize], target: usize) -> f64 {
        let logits = self.logits(&self.hidden(feats));
        log_sum_exp(&logits) - logits[target]
    }

    pub fn gradient(&self, feats: &[usize], target: usize) -> BagGradient {
        let h = self.hidden(feats);
        let logits = self.logits(&h);
        let loss = log_sum_exp(&logits) - logits[target];
        let mut delta = softmax(&logits);
        delta[target] -= 1.0;
        let mut d_hidden = vec![0.0; self.dim];
        let mut d_output = vec![0.0; self.output.len()];
        for (k, &dk) in delta.iter().enumerate() {
            let row = &self.output[k * self.dim..(k + 1) * self.dim];
            let drow = &mut d_output[k * self.dim..(k + 1) * self.dim];
            for j in 0..self.dim {
                d_hidden[j] += dk * row[j];
                drow[j] = dk * h[j];
            }
        }
        BagGradient { loss, hidden: d_hidden, output: d_output }
    }

    /// Dense gradient over the flat parameter vector (input table then
    /// output layer). Only suitable for small models.
    pub fn dense_gradient(&self, feats: &[usize], target: usize) -> (f64, Vec<f64>) {
        let g = self.gradient(feats, target);
        let mut dense = vec![0.0; self.param_count()];
        if !feats.is_empty() {
            let inv = 1.0 / feats.len() as f64;
            for &f in feats {
                for j in 0..self.dim {
                    dense[f * self.dim + j] += g.hidden[j] * inv;
                }
            }
        }
        let off = self.input.len();
        dense[off..].copy_from_slice(&g.output);
        (g.loss, dense)
    }

    /// One SGD step on a single example; returns the pre-update loss.
    pub fn sgd_step(&mut self, feats: &[usize], target: usize, lr: f64) -> f64 {
        let g = self.gradient(feats, target);
        for (w, d) in self.output.iter_mut().zip(&g.output) {
            *w -= lr * d;
        }
        if !feats.is_empty() {
            let scale = lr / feats.len() as f64;
            for &f in feats {
                let row = &mut self.input[f * self.dim..(f + 1) * self.dim];
                for (w, d) in row.iter_mut().zip(&g.hidden) {
                    *w -= scale * d;
                }
            }
        }
        g.loss
    }

    pub fn all_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|v| v.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the first maximum; earlier labels win ties.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Linear decay from `lr0` at step 0 to 0 at `total`.
pub(crate) fn decayed_lr(lr0: f64, step: usize, total: usize) -> f64 {
    lr0 * (1.0 - step as f64 / total.max(1) as f64)
}
