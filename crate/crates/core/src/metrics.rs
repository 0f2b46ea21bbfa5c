//! Multi-label evaluation: exact match, Hamming loss, macro false positive
//! rate, per-language precision and recall, and prediction statistics.
//!
//! Precision and recall are reported as `None` when undefined (zero
//! denominator) and left out of averages, with the number left out
//! reported alongside.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::langcodes::LabelUniverse;
use crate::tag::{LabelSet, LanguageTag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no instances to evaluate")]
    EmptyDataset,
    #[error("label universe is empty")]
    EmptyUniverse,
    #[error("instance {instance}: tag {tag} is outside the label universe")]
    OutsideUniverse { instance: usize, tag: LanguageTag },
}

/// A gold label set and the prediction for the same sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalInstance {
    pub gold: LabelSet,
    pub pred: LabelSet,
}

impl EvalInstance {
    pub fn new(gold: LabelSet, pred: LabelSet) -> Self {
        Self { gold, pred }
    }

    pub fn is_code_switched(&self) -> bool {
        self.gold.len() >= 2
    }
}

fn non_empty(instances: &[EvalInstance]) -> Result<usize, MetricsError> {
    if instances.is_empty() {
        Err(MetricsError::EmptyDataset)
    } else {
        Ok(instances.len())
    }
}

/// Fraction of instances whose prediction equals the gold set.
pub fn exact_match(instances: &[EvalInstance]) -> Result<f64, MetricsError> {
    let n = non_empty(instances)?;
    let hits = instances.iter().filter(|i| i.gold == i.pred).count();
    Ok(hits as f64 / n as f64)
}

/// Wrong indicator bits over `num_labels · N`.
pub fn hamming_loss(instances: &[EvalInstance], num_labels: usize) -> Result<f64, MetricsError> {
    let n = non_empty(instances)?;
    if num_labels == 0 {
        return Err(MetricsError::EmptyUniverse);
    }
    let wrong: usize = instances
        .iter()
        .map(|i| {
            let missed = i.gold.iter().filter(|t| !i.pred.contains(t.as_str())).count();
            let spurious = i.pred.iter().filter(|t| !i.gold.contains(t.as_str())).count();
            missed + spurious
        })
        .sum();
    Ok(wrong as f64 / (num_labels as f64 * n as f64))
}

/// Per-language confusion counts; `tp + fp + fn_ + tn` is the instance count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Adds another partial count, e.g. from a different shard.
    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    /// `fp / (fp + tn)`, `None` when the language has no negatives.
    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Confusion counts for every universe language, in universe order.
pub fn confusion(instances: &[EvalInstance], universe: &LabelUniverse) -> Result<Vec<ConfusionCounts>, MetricsError> {
    let mut counts = alloc::vec![ConfusionCounts::default(); universe.len()];
    let lookup = |instance: usize, tag: &LanguageTag| {
        universe
            .index_of(tag.as_str())
            .ok_or_else(|| MetricsError::OutsideUniverse {
                instance,
                tag: tag.clone(),
            })
    };
    for (n, inst) in instances.iter().enumerate() {
        for tag in &inst.gold {
            let i = lookup(n, tag)?;
            if inst.pred.contains(tag.as_str()) {
                counts[i].tp += 1;
            } else {
                counts[i].fn_ += 1;
            }
        }
        for tag in &inst.pred {
            let i = lookup(n, tag)?;
            if !inst.gold.contains(tag.as_str()) {
                counts[i].fp += 1;
            }
        }
    }
    let total = instances.len() as u64;
    for c in &mut counts {
        c.tn = total - c.tp - c.fp - c.fn_;
    }
    Ok(counts)
}

/// Which languages the macro false positive rate averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FprAveraging {
    /// Every universe language with at least one negative.
    #[default]
    Universe,
    /// Only languages appearing in some gold or predicted set.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroFpr {
    /// `None` when no language qualifies.
    pub value: Option<f64>,
    pub included: usize,
    /// Languages left out because they have no ground-truth negatives.
    pub excluded: usize,
}

pub fn macro_fpr(
    instances: &[EvalInstance],
    universe: &LabelUniverse,
    averaging: FprAveraging,
) -> Result<MacroFpr, MetricsError> {
    non_empty(instances)?;
    let counts = confusion(instances, universe)?;
    Ok(macro_fpr_from_counts(&counts, averaging))
}

fn macro_fpr_from_counts(counts: &[ConfusionCounts], averaging: FprAveraging) -> MacroFpr {
    let mut sum = 0.0;
    let (mut included, mut excluded) = (0, 0);
    for c in counts {
        if averaging == FprAveraging::Observed && c.tp + c.fp + c.fn_ == 0 {
            continue;
        }
        match c.fpr() {
            Some(r) => {
                sum += r;
                included += 1;
            }
            None => excluded += 1,
        }
    }
    MacroFpr {
        value: (included > 0).then(|| sum / included as f64),
        included,
        excluded,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguagePr {
    pub tag: LanguageTag,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRecall {
    /// Every universe language, in universe order.
    pub per_lang: Vec<LanguagePr>,
    /// Mean over defined precisions.
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub undefined_precision: usize,
    pub undefined_recall: usize,
}

pub fn precision_recall(instances: &[EvalInstance], universe: &LabelUniverse) -> Result<PrecisionRecall, MetricsError> {
    non_empty(instances)?;
    let counts = confusion(instances, universe)?;
    Ok(precision_recall_from_counts(&counts, universe))
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut n, mut undefined) = (0.0, 0usize, 0usize);
    for v in values {
        match v {
            Some(v) => {
                sum += v;
                n += 1;
            }
            None => undefined += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), undefined)
}

fn precision_recall_from_counts(counts: &[ConfusionCounts], universe: &LabelUniverse) -> PrecisionRecall {
    let per_lang: Vec<LanguagePr> = universe
        .tags()
        .iter()
        .zip(counts)
        .map(|(tag, c)| LanguagePr {
            tag: tag.clone(),
            precision: c.precision(),
            recall: c.recall(),
        })
        .collect();
    let (macro_precision, undefined_precision) = mean_defined(per_lang.iter().map(|p| p.precision));
    let (macro_recall, undefined_recall) = mean_defined(per_lang.iter().map(|p| p.recall));
    PrecisionRecall {
        per_lang,
        macro_precision,
        macro_recall,
        undefined_precision,
        undefined_recall,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryStats {
    /// Fraction of empty predictions.
    pub empty_rate: f64,
    /// Fraction of empty predictions among code-switched instances; 0 when
    /// there are none.
    pub cs_empty_rate: f64,
    /// Distinct languages across all predictions.
    pub unique_langs_predicted: usize,
    /// Mean predicted set size.
    pub mean_preds: f64,
}

pub fn auxiliary_stats(instances: &[EvalInstance]) -> Result<AuxiliaryStats, MetricsError> {
    let n = non_empty(instances)?;
    let empty = instances.iter().filter(|i| i.pred.is_empty()).count();
    let cs: Vec<&EvalInstance> = instances.iter().filter(|i| i.is_code_switched()).collect();
    let cs_empty = cs.iter().filter(|i| i.pred.is_empty()).count();
    let unique: BTreeSet<&LanguageTag> = instances.iter().flat_map(|i| i.pred.iter()).collect();
    let total_preds: usize = instances.iter().map(|i| i.pred.len()).sum();
    Ok(AuxiliaryStats {
        empty_rate: empty as f64 / n as f64,
        cs_empty_rate: if cs.is_empty() {
            0.0
        } else {
            cs_empty as f64 / cs.len() as f64
        },
        unique_langs_predicted: unique.len(),
        mean_preds: total_preds as f64 / n as f64,
    })
}

/// Instances with two or more gold labels, in order.
pub fn cs_subset(instances: &[EvalInstance]) -> Vec<EvalInstance> {
    instances.iter().filter(|i| i.is_code_switched()).cloned().collect()
}

/// The `k` most frequent predicted sets, by count then lexicographically.
pub fn prediction_histogram(instances: &[EvalInstance], k: usize) -> Vec<(LabelSet, usize)> {
    let mut counts: BTreeMap<&LabelSet, usize> = BTreeMap::new();
    for i in instances {
        *counts.entry(&i.pred).or_insert(0) += 1;
    }
    let mut all: Vec<(LabelSet, usize)> = counts.into_iter().map(|(s, c)| (s.clone(), c)).collect();
    // stable sort keeps the lexicographic order of the map among ties
    all.sort_by_key(|e| core::cmp::Reverse(e.1));
    all.truncate(k);
    all
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub fpr_averaging: FprAveraging,
}

/// Every metric over one set of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub universe_size: usize,
    pub exact_match: f64,
    pub hamming: f64,
    pub macro_fpr: MacroFpr,
    pub precision_recall: PrecisionRecall,
    pub aux: AuxiliaryStats,
}

impl MetricsReport {
    /// Undefined precision plus undefined recall entries.
    pub fn undefined_pr_count(&self) -> usize {
        self.precision_recall.undefined_precision + self.precision_recall.undefined_recall
    }
}

pub fn evaluate(
    instances: &[EvalInstance],
    universe: &LabelUniverse,
    options: EvalOptions,
) -> Result<MetricsReport, MetricsError> {
    let n = non_empty(instances)?;
    let counts = confusion(instances, universe)?;
    Ok(MetricsReport {
        n,
        universe_size: universe.len(),
        exact_match: exact_match(instances)?,
        hamming: hamming_loss(instances, universe.len())?,
        macro_fpr: macro_fpr_from_counts(&counts, options.fpr_averaging),
        precision_recall: precision_recall_from_counts(&counts, universe),
        aux: auxiliary_stats(instances)?,
    })
}
