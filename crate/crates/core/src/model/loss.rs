//! Output activations, losses and their gradients, in `f64`.
//!
//! The training loop and the gradient checks share these functions; every
//! gradient here is with respect to the logits `z = W·h`, and
//! [`linear_backward`] carries it back to `W` and `h`.

use alloc::vec;
use alloc::vec::Vec;

use super::LossMode;

/// Lower clamp applied to scores before taking logarithms.
pub const LOG_EPS: f64 = 1e-12;

fn clamp(p: f64) -> f64 {
    p.clamp(LOG_EPS, 1.0 - LOG_EPS)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// Summed binary cross-entropy, `-Σ y·ln p + (1-y)·ln(1-p)`.
pub fn bce(scores: &[f64], targets: &[bool]) -> f64 {
    debug_assert_eq!(scores.len(), targets.len());
    -scores
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = clamp(p);
            if y {
                libm::log(p)
            } else {
                libm::log(1.0 - p)
            }
        })
        .sum::<f64>()
}

/// Cross-entropy against a single gold index, `-ln p_gold`.
pub fn cross_entropy(scores: &[f64], gold: usize) -> f64 {
    -libm::log(clamp(scores[gold]))
}

/// Sigmoid + BCE: returns the loss and writes `dL/dz` into `grad`.
pub fn sigmoid_bce_grad(logits: &[f64], targets: &[bool], grad: &mut [f64]) -> f64 {
    let scores: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
    for ((g, &p), &y) in grad.iter_mut().zip(&scores).zip(targets) {
        *g = p - if y { 1.0 } else { 0.0 };
    }
    bce(&scores, targets)
}

/// Softmax + cross-entropy: returns the loss and writes `dL/dz` into `grad`.
pub fn softmax_ce_grad(logits: &[f64], gold: usize, grad: &mut [f64]) -> f64 {
    let scores = softmax(logits);
    for (k, (g, &p)) in grad.iter_mut().zip(&scores).enumerate() {
        *g = p - if k == gold { 1.0 } else { 0.0 };
    }
    cross_entropy(&scores, gold)
}

/// Backpropagates `dL/dz` through `z = W·h` with `W` row-major
/// `labels × dim`. Writes `dL/dW` and `dL/dh`.
pub fn linear_backward(w: &[f64], h: &[f64], dz: &[f64], dw: &mut [f64], dh: &mut [f64]) {
    let dim = h.len();
    dh.iter_mut().for_each(|x| *x = 0.0);
    for (l, &g) in dz.iter().enumerate() {
        let row = &w[l * dim..(l + 1) * dim];
        let drow = &mut dw[l * dim..(l + 1) * dim];
        for j in 0..dim {
            drow[j] = g * h[j];
            dh[j] += g * row[j];
        }
    }
}

/// Loss and parameter gradients for a single example.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleGradient {
    pub loss: f64,
    /// `dL/dW`, shaped like the output matrix.
    pub output: Vec<f64>,
    /// `dL/dE`, shaped like the embedding table; zero outside the bag.
    pub embeddings: Vec<f64>,
}

/// Forward and backward pass for one bag in `f64`.
///
/// `gold` holds label indices; softmax mode uses only the first.
pub fn example_gradient(
    embeddings: &[f64],
    output: &[f64],
    dim: usize,
    bag: &[u32],
    gold: &[usize],
    mode: LossMode,
) -> ExampleGradient {
    assert!(!bag.is_empty(), "empty bag has no gradient");
    let num_labels = output.len() / dim;
    let mut h = vec![0.0; dim];
    for &i in bag {
        let row = &embeddings[i as usize * dim..(i as usize + 1) * dim];
        h.iter_mut().zip(row).for_each(|(a, &e)| *a += e);
    }
    let n = bag.len() as f64;
    h.iter_mut().for_each(|a| *a /= n);
    let logits: Vec<f64> = output
        .chunks_exact(dim)
        .map(|row| row.iter().zip(&h).map(|(w, x)| w * x).sum())
        .collect();
    let mut dz = vec![0.0; num_labels];
    let loss = match mode {
        LossMode::SoftmaxCe => softmax_ce_grad(&logits, gold[0], &mut dz),
        LossMode::SigmoidBce => {
            let mut targets = vec![false; num_labels];
            gold.iter().for_each(|&g| targets[g] = true);
            sigmoid_bce_grad(&logits, &targets, &mut dz)
        }
    };
    let mut d_output = vec![0.0; output.len()];
    let mut dh = vec![0.0; dim];
    linear_backward(output, &h, &dz, &mut d_output, &mut dh);
    let mut d_emb = vec![0.0; embeddings.len()];
    for &i in bag {
        let row = &mut d_emb[i as usize * dim..(i as usize + 1) * dim];
        row.iter_mut().zip(&dh).for_each(|(d, &g)| *d += g / n);
    }
    ExampleGradient {
        loss,
        output: d_output,
        embeddings: d_emb,
    }
}
