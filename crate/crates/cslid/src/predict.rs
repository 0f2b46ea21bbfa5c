//! Line-by-line prediction shared by `predict`, `filter` and `eval`.

use std::fmt::Write as _;
use std::str::FromStr;

use cslid_core::decode::DecodeStrategy;
use cslid_core::model::ModelError;
use cslid_core::tag::{LabelSet, LanguageTag};
use cslid_core::textprep;
use cslid_core::trigram::ProfileSet;
use cslid_core::{LabelUniverse, LinearModel, ScoreVector};

pub enum Classifier {
    Linear(LinearModel),
    Trigram(ProfileSet),
}

impl Classifier {
    /// `None` when the text yields no features; the prediction is then
    /// empty.
    pub fn scores(&self, text: &str) -> Option<ScoreVector> {
        match self {
            Classifier::Linear(m) => match m.predict_text(text) {
                Ok(s) => Some(s),
                Err(ModelError::NoFeatures) => None,
                Err(e) => unreachable!("text prediction failed: {e}"),
            },
            Classifier::Trigram(p) => Some(p.classify(&textprep::clean(text))),
        }
    }

    pub fn default_decode(&self) -> DecodeStrategy {
        match self {
            Classifier::Linear(m) => match m.mode() {
                cslid_core::LossMode::SoftmaxCe => DecodeStrategy::Top1,
                cslid_core::LossMode::SigmoidBce => {
                    DecodeStrategy::dynamic(DecodeStrategy::DEFAULT_SIGMAS).expect("valid default")
                }
            },
            Classifier::Trigram(_) => {
                DecodeStrategy::closest_plus(DecodeStrategy::DEFAULT_CLOSEST).expect("valid default")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Sorted by tag.
    pub labels: Vec<LanguageTag>,
    /// Aligned with `labels`.
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn label_set(&self) -> LabelSet {
        self.labels.iter().cloned().collect()
    }

    /// `labels<TAB>scores`, both comma-joined, scores to six decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(l.as_str());
        }
        out.push('\t');
        for (i, s) in self.scores.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{s:.6}").expect("writing to a string");
        }
        out
    }
}

pub struct Predictor {
    classifier: Classifier,
    decode: DecodeStrategy,
    universe: Option<LabelUniverse>,
}

impl Predictor {
    /// With a universe, predicted tags are normalized into it and tags it
    /// cannot map are dropped.
    pub fn new(classifier: Classifier, decode: DecodeStrategy, universe: Option<LabelUniverse>) -> Self {
        Self {
            classifier,
            decode,
            universe,
        }
    }

    pub fn decode(&self) -> DecodeStrategy {
        self.decode
    }

    pub fn predict(&self, text: &str) -> Prediction {
        let Some(scores) = self.classifier.scores(text) else {
            return Prediction {
                labels: Vec::new(),
                scores: Vec::new(),
            };
        };
        let chosen = self.decode.decode(&scores);
        let mut pairs: Vec<(LanguageTag, f64)> = Vec::with_capacity(chosen.len());
        for tag in &chosen {
            let i = scores
                .labels()
                .iter()
                .position(|l| l == tag)
                .expect("decoded label comes from the score vector");
            let tag = match &self.universe {
                Some(u) => match u.normalize(tag.as_str()) {
                    Some(t) => t,
                    None => continue,
                },
                None => tag.clone(),
            };
            match pairs.iter_mut().find(|(t, _)| *t == tag) {
                Some(p) => p.1 = p.1.max(scores.scores()[i]),
                None => pairs.push((tag, scores.scores()[i])),
            }
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (labels, scores) = pairs.into_iter().unzip();
        Prediction { labels, scores }
    }
}

/// Which predictions `filter` keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterQuery {
    /// Two or more predicted labels.
    CsOnly,
    Pair(LanguageTag, LanguageTag),
    Lang(LanguageTag),
}

impl FilterQuery {
    pub fn matches(&self, pred: &LabelSet) -> bool {
        match self {
            FilterQuery::CsOnly => pred.len() >= 2,
            FilterQuery::Pair(a, b) => pred.contains(a.as_str()) && pred.contains(b.as_str()),
            FilterQuery::Lang(t) => pred.contains(t.as_str()),
        }
    }

    pub fn tags(&self) -> Vec<&LanguageTag> {
        match self {
            FilterQuery::CsOnly => vec![],
            FilterQuery::Pair(a, b) => vec![a, b],
            FilterQuery::Lang(t) => vec![t],
        }
    }
}

impl FromStr for FilterQuery {
    type Err = String;

    /// `cs`, `pair:<a>,<b>` or `lang:<tag>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tag = |t: &str| LanguageTag::new(t.trim()).map_err(|e| e.to_string());
        match s.split_once(':') {
            None if s == "cs" => Ok(FilterQuery::CsOnly),
            Some(("pair", rest)) => {
                let (a, b) = rest.split_once(',').ok_or("pair needs two comma-separated tags")?;
                Ok(FilterQuery::Pair(tag(a)?, tag(b)?))
            }
            Some(("lang", t)) => Ok(FilterQuery::Lang(tag(t)?)),
            _ => Err(format!("unknown query {s:?}; expected cs, pair:<a>,<b> or lang:<tag>")),
        }
    }
}
