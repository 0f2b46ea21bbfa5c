//! Averaged-embedding linear classifier.
//!
//! A sentence is a bag of word and character n-gram indices; its hidden
//! vector is the mean of their embedding rows, and the logits are `W·h`.
//! The loss mode decides whether logits become a softmax distribution or
//! independent sigmoid scores.

pub mod loss;
mod train;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hashbrown::HashSet;
use thiserror::Error;

use crate::tag::{LabelSet, LanguageTag};
use crate::textprep::{self, FeatureBag, Vocabulary};

pub use train::{train, TrainConfig, TrainError, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossMode {
    /// Softmax output, cross-entropy loss, single-label training.
    SoftmaxCe,
    /// Independent sigmoid outputs, summed binary cross-entropy.
    SigmoidBce,
}

impl LossMode {
    pub fn code(self) -> u8 {
        match self {
            LossMode::SoftmaxCe => 0,
            LossMode::SigmoidBce => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(LossMode::SoftmaxCe),
            1 => Some(LossMode::SigmoidBce),
            _ => None,
        }
    }

    pub fn score_kind(self) -> ScoreKind {
        match self {
            LossMode::SoftmaxCe => ScoreKind::Simplex,
            LossMode::SigmoidBce => ScoreKind::Independent,
        }
    }
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossMode::SoftmaxCe => "softmax",
            LossMode::SigmoidBce => "sigmoid",
        })
    }
}

impl FromStr for LossMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "softmax" | "softmax-ce" => Ok(LossMode::SoftmaxCe),
            "sigmoid" | "sigmoid-bce" | "bce" => Ok(LossMode::SigmoidBce),
            other => Err(alloc::format!("unknown loss mode {other:?} (softmax|sigmoid)")),
        }
    }
}

/// What the values of a [`ScoreVector`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Softmax probabilities; sum to one.
    Simplex,
    /// Independent sigmoid scores in (0, 1).
    Independent,
    /// Trigram similarities scaled so the best candidate scores exactly 1.
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("{scores} scores for {labels} labels")]
    LengthMismatch { labels: usize, scores: usize },
    #[error("score {index} is not finite")]
    NotFinite { index: usize },
}

/// Per-label scores aligned with a label list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    labels: Arc<[LanguageTag]>,
    scores: Vec<f64>,
    kind: ScoreKind,
}

impl ScoreVector {
    pub fn new(labels: Arc<[LanguageTag]>, scores: Vec<f64>, kind: ScoreKind) -> Result<Self, ScoreError> {
        if labels.len() != scores.len() {
            return Err(ScoreError::LengthMismatch {
                labels: labels.len(),
                scores: scores.len(),
            });
        }
        if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
            return Err(ScoreError::NotFinite { index });
        }
        Ok(Self { labels, scores, kind })
    }

    /// A score vector with no candidates, e.g. trigram input with no
    /// majority script.
    pub fn empty(kind: ScoreKind) -> Self {
        Self {
            labels: Arc::from(Vec::new()),
            scores: Vec::new(),
            kind,
        }
    }

    pub fn labels(&self) -> &[LanguageTag] {
        &self.labels
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Label indices ordered by descending score, ties by ascending tag.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .total_cmp(&self.scores[a])
                .then_with(|| self.labels[a].cmp(&self.labels[b]))
        });
        order
    }

    fn gold_mask(&self, gold: &LabelSet) -> Result<Vec<bool>, ModelError> {
        let mut mask = alloc::vec![false; self.labels.len()];
        for tag in gold {
            let i = self
                .labels
                .iter()
                .position(|l| l == tag)
                .ok_or_else(|| ModelError::UnknownLabel(tag.clone()))?;
            mask[i] = true;
        }
        Ok(mask)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("no known word or n-gram in input")]
    NoFeatures,
    #[error("label {0} is not one of the model's labels")]
    UnknownLabel(LanguageTag),
    #[error("softmax loss needs exactly one gold label, got {0}")]
    MultiLabelGold(usize),
    #[error("{loss} loss needs {expected:?} scores, got {actual:?}")]
    WrongScoreKind {
        loss: &'static str,
        expected: ScoreKind,
        actual: ScoreKind,
    },
    #[error("embedding width must be at least 1")]
    ZeroDim,
    #[error("model needs at least one label")]
    NoLabels,
    #[error("duplicate label {0}")]
    DuplicateLabel(LanguageTag),
    #[error("{matrix} has {actual} values, expected {expected}")]
    Shape {
        matrix: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{matrix} contains a non-finite value at {index}")]
    NonFinite { matrix: &'static str, index: usize },
}

/// Summed binary cross-entropy of sigmoid scores against a gold set.
pub fn bce_loss(scores: &ScoreVector, gold: &LabelSet) -> Result<f64, ModelError> {
    if scores.kind != ScoreKind::Independent {
        return Err(ModelError::WrongScoreKind {
            loss: "BCE",
            expected: ScoreKind::Independent,
            actual: scores.kind,
        });
    }
    let mask = scores.gold_mask(gold)?;
    Ok(loss::bce(&scores.scores, &mask))
}

/// Cross-entropy of softmax scores against a single gold label.
pub fn ce_loss(scores: &ScoreVector, gold: &LabelSet) -> Result<f64, ModelError> {
    if scores.kind != ScoreKind::Simplex {
        return Err(ModelError::WrongScoreKind {
            loss: "cross-entropy",
            expected: ScoreKind::Simplex,
            actual: scores.kind,
        });
    }
    if gold.len() != 1 {
        return Err(ModelError::MultiLabelGold(gold.len()));
    }
    let mask = scores.gold_mask(gold)?;
    let index = mask.iter().position(|&m| m).expect("one gold label");
    Ok(loss::cross_entropy(&scores.scores, index))
}

/// A trained classifier. Immutable; share it freely across threads.
#[derive(Debug, Clone)]
pub struct LinearModel {
    vocab: Vocabulary,
    dim: usize,
    embeddings: Vec<f32>,
    output: Vec<f32>,
    labels: Arc<[LanguageTag]>,
    mode: LossMode,
}

impl PartialEq for LinearModel {
    /// Matrices compare bit for bit.
    fn eq(&self, other: &Self) -> bool {
        fn bits(v: &[f32]) -> impl Iterator<Item = u32> + '_ {
            v.iter().map(|x| x.to_bits())
        }
        self.mode == other.mode
            && self.dim == other.dim
            && self.labels == other.labels
            && self.vocab == other.vocab
            && bits(&self.embeddings).eq(bits(&other.embeddings))
            && bits(&self.output).eq(bits(&other.output))
    }
}

impl LinearModel {
    /// Assembles a model, checking shapes, finiteness and label uniqueness.
    ///
    /// `embeddings` is `vocab.len() × dim` and `output` is
    /// `labels.len() × dim`, both row-major.
    pub fn from_parts(
        vocab: Vocabulary,
        dim: usize,
        embeddings: Vec<f32>,
        output: Vec<f32>,
        labels: Vec<LanguageTag>,
        mode: LossMode,
    ) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::ZeroDim);
        }
        if labels.is_empty() {
            return Err(ModelError::NoLabels);
        }
        {
            let mut seen = HashSet::new();
            for l in &labels {
                if !seen.insert(l.as_str()) {
                    return Err(ModelError::DuplicateLabel(l.clone()));
                }
            }
        }
        check_matrix("embeddings", &embeddings, vocab.len() * dim)?;
        check_matrix("output", &output, labels.len() * dim)?;
        Ok(Self {
            vocab,
            dim,
            embeddings,
            output,
            labels: labels.into(),
            mode,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[LanguageTag] {
        &self.labels
    }

    pub fn mode(&self) -> LossMode {
        self.mode
    }

    pub fn embeddings(&self) -> &[f32] {
        &self.embeddings
    }

    pub fn output(&self) -> &[f32] {
        &self.output
    }

    /// Mean of the embedding rows in the bag.
    pub fn hidden(&self, bag: &FeatureBag) -> Result<Vec<f32>, ModelError> {
        if bag.is_empty() {
            return Err(ModelError::NoFeatures);
        }
        let mut h = alloc::vec![0.0f32; self.dim];
        mean_rows(&self.embeddings, self.dim, bag.indices(), &mut h);
        Ok(h)
    }

    pub fn logits(&self, bag: &FeatureBag) -> Result<Vec<f64>, ModelError> {
        let h = self.hidden(bag)?;
        Ok(self
            .output
            .chunks_exact(self.dim)
            .map(|row| dot(row, &h) as f64)
            .collect())
    }

    /// Scores every label: softmax or elementwise sigmoid of `W·h`.
    pub fn forward(&self, bag: &FeatureBag) -> Result<ScoreVector, ModelError> {
        let logits = self.logits(bag)?;
        Ok(self.scores_from_logits(&logits))
    }

    pub(crate) fn scores_from_logits(&self, logits: &[f64]) -> ScoreVector {
        let scores = match self.mode {
            LossMode::SoftmaxCe => loss::softmax(logits),
            LossMode::SigmoidBce => logits.iter().map(|&z| loss::sigmoid(z)).collect(),
        };
        ScoreVector {
            labels: self.labels.clone(),
            scores,
            kind: self.mode.score_kind(),
        }
    }

    pub fn featurize(&self, text: &str) -> FeatureBag {
        textprep::featurize(&textprep::prepare(text), &self.vocab)
    }

    /// Cleans, tokenizes, featurizes and scores raw text.
    pub fn predict_text(&self, text: &str) -> Result<ScoreVector, ModelError> {
        self.forward(&self.featurize(text))
    }
}

fn check_matrix(matrix: &'static str, values: &[f32], expected: usize) -> Result<(), ModelError> {
    if values.len() != expected {
        return Err(ModelError::Shape {
            matrix,
            expected,
            actual: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite { matrix, index });
    }
    Ok(())
}

pub(crate) fn mean_rows(table: &[f32], dim: usize, rows: &[u32], out: &mut [f32]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for &r in rows {
        let row = &table[r as usize * dim..(r as usize + 1) * dim];
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    let inv = 1.0 / rows.len() as f32;
    out.iter_mut().for_each(|x| *x *= inv);
}

/// Dot product with eight independent accumulators so the loop vectorizes;
/// the summation order is fixed, so results are reproducible.
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0f32;
    for k in chunks * 8..a.len() {
        tail += a[k] * b[k];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}
