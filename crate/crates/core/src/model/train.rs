use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{dot, loss, mean_rows, LinearModel, LossMode, ModelError};
use crate::datasets::Example;
use crate::tag::LanguageTag;
use crate::textprep::{self, FeatureBag, NgramRange, VocabError, VocabularyBuilder};

/// SGD hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    /// Initial learning rate; decays linearly to zero over all steps.
    pub lr0: f64,
    /// Words must occur strictly more often than this to enter the vocabulary.
    pub min_word_count: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            epochs: 2,
            lr0: 0.5,
            min_word_count: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Vocabulary(#[from] VocabError),
    #[error("example {example}: softmax training needs exactly one gold label, got {labels}")]
    MultiLabelGold { example: usize, labels: usize },
    #[error("no example has a known word or n-gram")]
    NoTrainableExamples,
    #[error("loss became {loss} at epoch {epoch}, step {step} (example {example}, learning rate {lr})")]
    NonFiniteLoss {
        loss: f64,
        epoch: usize,
        step: usize,
        example: usize,
        lr: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub steps: usize,
    /// Examples without any in-vocabulary feature; never trained on.
    pub skipped_empty: usize,
    /// Mean loss per epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }
}

struct Prepared {
    bag: FeatureBag,
    /// Indices into the label list.
    gold: Vec<usize>,
}

/// Trains a model with plain sequential SGD, one example per step.
///
/// Embeddings start uniform in `[-1/dim, 1/dim]`, output weights at zero.
/// Examples are reshuffled every epoch from the seeded generator, so the
/// result is a pure function of `(examples, cfg, mode)`.
pub fn train(
    examples: &[Example],
    cfg: &TrainConfig,
    mode: LossMode,
) -> Result<(LinearModel, TrainReport), TrainError> {
    if cfg.dim == 0 {
        return Err(TrainError::InvalidConfig("dim must be at least 1"));
    }
    if cfg.epochs == 0 {
        return Err(TrainError::InvalidConfig("epochs must be at least 1"));
    }
    if !(cfg.lr0 > 0.0 && cfg.lr0.is_finite()) {
        return Err(TrainError::InvalidConfig("lr0 must be positive"));
    }
    if examples.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if mode == LossMode::SoftmaxCe {
        if let Some((i, ex)) = examples.iter().enumerate().find(|(_, e)| e.gold().len() != 1) {
            return Err(TrainError::MultiLabelGold {
                example: i,
                labels: ex.gold().len(),
            });
        }
    }

    let tokenized: Vec<Vec<textprep::Token>> = examples.iter().map(|e| textprep::prepare(e.text())).collect();
    let mut builder = VocabularyBuilder::new();
    for t in &tokenized {
        builder.add(t);
    }
    let vocab = builder.build(cfg.min_word_count, NgramRange::DEFAULT)?;

    let labels: Vec<LanguageTag> = examples
        .iter()
        .flat_map(|e| e.gold().iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut skipped_empty = 0;
    let mut data = Vec::with_capacity(examples.len());
    for (ex, tokens) in examples.iter().zip(&tokenized) {
        let bag = textprep::featurize(tokens, &vocab);
        if bag.is_empty() {
            skipped_empty += 1;
            continue;
        }
        let gold = ex
            .gold()
            .iter()
            .map(|g| labels.binary_search(g).expect("label collected above"))
            .collect();
        data.push(Prepared { bag, gold });
    }
    drop(tokenized);
    if data.is_empty() {
        return Err(TrainError::NoTrainableExamples);
    }

    let dim = cfg.dim;
    let num_labels = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 1.0 / dim as f32;
    let init = Uniform::new_inclusive(-bound, bound);
    let mut emb: Vec<f32> = (0..vocab.len() * dim).map(|_| init.sample(&mut rng)).collect();
    let mut out = vec![0.0f32; num_labels * dim];

    let total_steps = cfg.epochs * data.len();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut h = vec![0.0f32; dim];
    let mut grad_h = vec![0.0f32; dim];
    let mut logits = vec![0.0f64; num_labels];
    let mut dz = vec![0.0f64; num_labels];
    let mut targets = vec![false; num_labels];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &ex in &order {
            let lr = cfg.lr0 * (1.0 - step as f64 / total_steps as f64);
            let item = &data[ex];
            let bag = item.bag.indices();
            mean_rows(&emb, dim, bag, &mut h);
            for (z, row) in logits.iter_mut().zip(out.chunks_exact(dim)) {
                *z = dot(row, &h) as f64;
            }
            let loss = match mode {
                LossMode::SoftmaxCe => loss::softmax_ce_grad(&logits, item.gold[0], &mut dz),
                LossMode::SigmoidBce => {
                    targets.iter_mut().for_each(|t| *t = false);
                    item.gold.iter().for_each(|&g| targets[g] = true);
                    loss::sigmoid_bce_grad(&logits, &targets, &mut dz)
                }
            };
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    loss,
                    epoch,
                    step,
                    example: ex,
                    lr,
                });
            }
            loss_sum += loss;

            // dL/dh against the weights before this step's update
            grad_h.iter_mut().for_each(|g| *g = 0.0);
            for (&g, row) in dz.iter().zip(out.chunks_exact(dim)) {
                let g = g as f32;
                for (gh, &w) in grad_h.iter_mut().zip(row) {
                    *gh += g * w;
                }
            }
            let lr32 = lr as f32;
            for (&g, row) in dz.iter().zip(out.chunks_exact_mut(dim)) {
                let scale = lr32 * g as f32;
                for (w, &hv) in row.iter_mut().zip(&h) {
                    *w -= scale * hv;
                }
            }
            let scale = lr32 / bag.len() as f32;
            for &i in bag {
                let row = &mut emb[i as usize * dim..(i as usize + 1) * dim];
                for (e, &g) in row.iter_mut().zip(&grad_h) {
                    *e -= scale * g;
                }
            }
            step += 1;
        }
        epoch_losses.push(loss_sum / data.len() as f64);
    }

    let model = LinearModel::from_parts(vocab, dim, emb, out, labels, mode)?;
    Ok((
        model,
        TrainReport {
            steps: step,
            skipped_empty,
            epoch_losses,
        },
    ))
}
