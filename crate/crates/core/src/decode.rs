//! Turning score vectors into predicted label sets.
//!
//! Every threshold comparison is strict. Ties in rank go to the
//! lexicographically smaller tag.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::model::{ScoreKind, ScoreVector};
use crate::tag::LabelSet;

/// Population (divide by `L`) or sample (divide by `L - 1`) deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Deviation {
    #[default]
    Population,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecodeStrategy {
    /// The single best label.
    Top1,
    /// Every label scoring above `k`, `0 < k < 1`.
    Fixed(f64),
    /// The best label, plus the runner-up when it clears
    /// `mean + m·sd` of all scores.
    Dynamic { m: f64, deviation: Deviation },
    /// The best label, plus the runner-up when it scores above `c`.
    ClosestPlus(f64),
}

impl DecodeStrategy {
    pub const DEFAULT_SIGMAS: f64 = 2.0;
    pub const DEFAULT_CLOSEST: f64 = 0.99;

    pub fn fixed(k: f64) -> Result<Self, String> {
        if k > 0.0 && k < 1.0 {
            Ok(Self::Fixed(k))
        } else {
            Err(format!("fixed threshold must lie in (0, 1), got {k}"))
        }
    }

    pub fn dynamic(m: f64) -> Result<Self, String> {
        if m >= 0.0 && m.is_finite() {
            Ok(Self::Dynamic {
                m,
                deviation: Deviation::Population,
            })
        } else {
            Err(format!("dynamic multiplier must be non-negative, got {m}"))
        }
    }

    pub fn closest_plus(c: f64) -> Result<Self, String> {
        if c > 0.0 && c <= 1.0 {
            Ok(Self::ClosestPlus(c))
        } else {
            Err(format!("closest-plus threshold must lie in (0, 1], got {c}"))
        }
    }

    pub fn decode(&self, scores: &ScoreVector) -> LabelSet {
        match *self {
            DecodeStrategy::Top1 => decode_top1(scores),
            DecodeStrategy::Fixed(k) => decode_fixed(scores, k),
            DecodeStrategy::Dynamic { m, deviation } => decode_dynamic_with(scores, m, deviation),
            DecodeStrategy::ClosestPlus(c) => decode_closest_plus(scores, c),
        }
    }
}

impl FromStr for DecodeStrategy {
    type Err = String;

    /// `top1`, `fixed:<k>`, `dynamic[:<m>]`, `closest[:<c>]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: &str| {
            a.parse::<f64>()
                .map_err(|_| format!("bad number {a:?} in decode strategy {s:?}"))
        };
        match (name, arg) {
            ("top1", None) => Ok(Self::Top1),
            ("fixed", Some(a)) => Self::fixed(num(a)?),
            ("dynamic", None) => Self::dynamic(Self::DEFAULT_SIGMAS),
            ("dynamic", Some(a)) => Self::dynamic(num(a)?),
            ("closest", None) => Self::closest_plus(Self::DEFAULT_CLOSEST),
            ("closest", Some(a)) => Self::closest_plus(num(a)?),
            _ => Err(format!(
                "unknown decode strategy {s:?} (top1|fixed:<k>|dynamic:<m>|closest:<c>)"
            )),
        }
    }
}

impl fmt::Display for DecodeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeStrategy::Top1 => write!(f, "top1"),
            DecodeStrategy::Fixed(k) => write!(f, "fixed:{k}"),
            DecodeStrategy::Dynamic { m, .. } => write!(f, "dynamic:{m}"),
            DecodeStrategy::ClosestPlus(c) => write!(f, "closest:{c}"),
        }
    }
}

/// The best and second-best label indices.
fn top_two(scores: &ScoreVector) -> (Option<usize>, Option<usize>) {
    let s = scores.scores();
    let l = scores.labels();
    let better = |a: usize, b: usize| s[a] > s[b] || (s[a] == s[b] && l[a] < l[b]);
    let (mut first, mut second): (Option<usize>, Option<usize>) = (None, None);
    for i in 0..s.len() {
        match first {
            None => first = Some(i),
            Some(f) if better(i, f) => {
                second = first;
                first = Some(i);
            }
            _ => match second {
                None => second = Some(i),
                Some(sec) if better(i, sec) => second = Some(i),
                _ => {}
            },
        }
    }
    (first, second)
}

fn set_of(scores: &ScoreVector, idx: impl IntoIterator<Item = usize>) -> LabelSet {
    idx.into_iter().map(|i| scores.labels()[i].clone()).collect()
}

/// The argmax label; empty only for an empty score vector.
pub fn decode_top1(scores: &ScoreVector) -> LabelSet {
    set_of(scores, top_two(scores).0)
}

/// All labels scoring strictly above `k`. On softmax scores at most
/// `⌊1/k⌋` labels can qualify.
pub fn decode_fixed(scores: &ScoreVector, k: f64) -> LabelSet {
    let out = set_of(
        scores,
        scores
            .scores()
            .iter()
            .enumerate()
            .filter(|&(_, &p)| p > k)
            .map(|(i, _)| i),
    );
    debug_assert!(
        scores.kind() != ScoreKind::Simplex || out.len() as f64 * k <= 1.0 + 1e-9,
        "{} labels above {k} on a probability simplex",
        out.len()
    );
    out
}

/// Mean and standard deviation of the scores.
pub fn mean_and_deviation(values: &[f64], deviation: Deviation) -> (f64, f64) {
    let n = values.len() as f64;
    if let Some(&first) = values.first() {
        // constant input: exact mean, zero spread, free of rounding
        if values.iter().all(|&v| v == first) {
            return (first, 0.0);
        }
    }
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let denom = match deviation {
        Deviation::Population => n,
        Deviation::Sample => n - 1.0,
    };
    let sd = if denom > 0.0 { libm::sqrt(ss / denom) } else { 0.0 };
    (mean, sd)
}

/// `mean + m·sd` over the score vector.
pub fn dynamic_threshold(scores: &[f64], m: f64, deviation: Deviation) -> f64 {
    let (mean, sd) = mean_and_deviation(scores, deviation);
    mean + m * sd
}

/// The argmax, plus the runner-up if it beats `mean + m·σ` (population σ).
pub fn decode_dynamic(scores: &ScoreVector, m: f64) -> LabelSet {
    decode_dynamic_with(scores, m, Deviation::Population)
}

pub fn decode_dynamic_with(scores: &ScoreVector, m: f64, deviation: Deviation) -> LabelSet {
    let (first, second) = top_two(scores);
    let Some(first) = first else {
        return LabelSet::new();
    };
    let mut out = set_of(scores, [first]);
    if let Some(second) = second {
        let theta = dynamic_threshold(scores.scores(), m, deviation);
        if scores.scores()[second] > theta {
            out.insert(scores.labels()[second].clone());
        }
    }
    out
}

/// The closest language, plus the runner-up if its scaled score exceeds `c`.
pub fn decode_closest_plus(scores: &ScoreVector, c: f64) -> LabelSet {
    let (first, second) = top_two(scores);
    let Some(first) = first else {
        return LabelSet::new();
    };
    let mut out = set_of(scores, [first]);
    if let Some(second) = second.filter(|&i| scores.scores()[i] > c) {
        out.insert(scores.labels()[second].clone());
    }
    out
}
