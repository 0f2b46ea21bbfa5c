//! Script-gated character-trigram rank profiles.
//!
//! A profile is the list of a text's most frequent trigrams, most frequent
//! first. Input text is compared only against languages written in its
//! majority script, using the out-of-place rank distance, and distances are
//! min-max scaled so the closest language scores exactly 1.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use thiserror::Error;
use unicode_script::{Script, UnicodeScript};

use crate::model::{ScoreKind, ScoreVector};
use crate::tag::LanguageTag;

/// Default number of ranked trigrams per profile.
pub const DEFAULT_PROFILE_SIZE: usize = 300;

fn counted(script: Script) -> bool {
    !matches!(script, Script::Common | Script::Inherited | Script::Unknown)
}

/// The script holding a strict majority of the script-bearing code points.
///
/// Common, Inherited and unassigned code points are ignored. `None` when
/// nothing is counted or no script has more than half.
pub fn detect_script(text: &str) -> Option<Script> {
    let mut counts: BTreeMap<&'static str, (Script, usize)> = BTreeMap::new();
    let mut total = 0usize;
    for c in text.chars() {
        let s = c.script();
        if counted(s) {
            counts.entry(s.short_name()).or_insert((s, 0)).1 += 1;
            total += 1;
        }
    }
    counts.into_values().find(|&(_, n)| 2 * n > total).map(|(s, _)| s)
}

/// Accumulates trigram counts over one or more texts.
#[derive(Debug, Clone, Default)]
pub struct TrigramCounter {
    counts: HashMap<String, u64>,
}

impl TrigramCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Lowercases the text, pads each whitespace-separated word with `_`
    /// on both sides and counts its code-point trigrams.
    pub fn add(&mut self, text: &str) {
        let mut padded: Vec<char> = Vec::new();
        let mut key = String::new();
        for word in text.split_whitespace() {
            padded.clear();
            padded.push('_');
            padded.extend(word.chars().flat_map(char::to_lowercase));
            padded.push('_');
            for w in padded.windows(3) {
                key.clear();
                key.extend(w);
                if let Some(c) = self.counts.get_mut(key.as_str()) {
                    *c += 1;
                } else {
                    self.counts.insert(key.clone(), 1);
                }
            }
        }
    }

    /// The `size` most frequent trigrams, ties broken lexicographically.
    pub fn ranks(self, size: usize) -> Vec<String> {
        let mut all: Vec<(String, u64)> = self.counts.into_iter().collect();
        all.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(size);
        all.into_iter().map(|(t, _)| t).collect()
    }
}

/// Ranked trigrams of a single text.
pub fn profile(text: &str, size: usize) -> Vec<String> {
    let mut counter = TrigramCounter::new();
    counter.add(text);
    counter.ranks(size)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("profile for {language} has {len} trigrams, more than the limit {limit}")]
    TooLong {
        language: LanguageTag,
        len: usize,
        limit: usize,
    },
    #[error("profile for {language} repeats trigram {trigram:?}")]
    DuplicateTrigram { language: LanguageTag, trigram: String },
    #[error("profile for {language} uses script {script} but the tag says {tag_script}")]
    ScriptMismatch {
        language: LanguageTag,
        script: &'static str,
        tag_script: String,
    },
    #[error("duplicate profile for {0}")]
    DuplicateLanguage(LanguageTag),
    #[error("unknown script code {0:?}")]
    UnknownScript(String),
}

/// One language's ranked trigrams.
#[derive(Debug, Clone)]
pub struct TrigramProfile {
    language: LanguageTag,
    script: Script,
    ranks: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl PartialEq for TrigramProfile {
    fn eq(&self, other: &Self) -> bool {
        self.language == other.language && self.script == other.script && self.ranks == other.ranks
    }
}

impl TrigramProfile {
    /// Checks that trigrams are distinct, at most `limit` long, and that
    /// the script agrees with the tag's script subtag when it names one.
    pub fn new(language: LanguageTag, script: Script, ranks: Vec<String>, limit: usize) -> Result<Self, ProfileError> {
        if ranks.len() > limit {
            return Err(ProfileError::TooLong {
                language,
                len: ranks.len(),
                limit,
            });
        }
        if let Some(tag_script) = language.script().and_then(Script::from_short_name) {
            if tag_script != script {
                return Err(ProfileError::ScriptMismatch {
                    script: script.short_name(),
                    tag_script: String::from(tag_script.short_name()),
                    language,
                });
            }
        }
        let mut lookup = HashMap::with_capacity(ranks.len());
        for (i, t) in ranks.iter().enumerate() {
            if lookup.insert(t.clone(), i as u32).is_some() {
                return Err(ProfileError::DuplicateTrigram {
                    language,
                    trigram: t.clone(),
                });
            }
        }
        Ok(Self {
            language,
            script,
            ranks,
            lookup,
        })
    }

    pub fn language(&self) -> &LanguageTag {
        &self.language
    }

    pub fn script(&self) -> Script {
        self.script
    }

    pub fn ranks(&self) -> &[String] {
        &self.ranks
    }

    pub fn rank(&self, trigram: &str) -> Option<usize> {
        self.lookup.get(trigram).map(|&r| r as usize)
    }
}

/// Parses a four-letter ISO 15924 code such as `Latn`.
pub fn parse_script(code: &str) -> Result<Script, ProfileError> {
    Script::from_short_name(code).ok_or_else(|| ProfileError::UnknownScript(String::from(code)))
}

/// Out-of-place distance: the sum over input trigrams of the rank
/// displacement, with `size` charged for trigrams missing from `lang`.
pub fn distance(input: &[String], lang: &TrigramProfile, size: usize) -> u64 {
    input
        .iter()
        .enumerate()
        .map(|(i, t)| match lang.rank(t) {
            Some(r) => i.abs_diff(r) as u64,
            None => size as u64,
        })
        .sum()
}

/// All language profiles, built with one common profile size.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    profiles: Vec<TrigramProfile>,
    size: usize,
}

impl ProfileSet {
    pub fn new(profiles: Vec<TrigramProfile>, size: usize) -> Result<Self, ProfileError> {
        let mut seen = HashSet::new();
        for p in &profiles {
            if p.ranks.len() > size {
                return Err(ProfileError::TooLong {
                    language: p.language.clone(),
                    len: p.ranks.len(),
                    limit: size,
                });
            }
            if !seen.insert(p.language.clone()) {
                return Err(ProfileError::DuplicateLanguage(p.language.clone()));
            }
        }
        Ok(Self { profiles, size })
    }

    pub fn profiles(&self) -> &[TrigramProfile] {
        &self.profiles
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Scores the candidates sharing the text's majority script.
    pub fn classify(&self, text: &str) -> ScoreVector {
        classify_trigram(text, self)
    }
}

/// Scores every profile written in the text's script; the closest gets 1,
/// the farthest 0, linear in between. All candidates score 1 when their
/// distances are equal. No majority script gives an empty vector.
pub fn classify_trigram(text: &str, profiles: &ProfileSet) -> ScoreVector {
    let Some(script) = detect_script(text) else {
        return ScoreVector::empty(ScoreKind::Scaled);
    };
    let input = profile(text, profiles.size);
    let candidates: Vec<&TrigramProfile> = profiles.profiles.iter().filter(|p| p.script == script).collect();
    if candidates.is_empty() {
        return ScoreVector::empty(ScoreKind::Scaled);
    }
    let distances: Vec<u64> = candidates.iter().map(|p| distance(&input, p, profiles.size)).collect();
    let min = *distances.iter().min().expect("non-empty");
    let max = *distances.iter().max().expect("non-empty");
    let scores = distances
        .iter()
        .map(|&d| {
            if max == min {
                1.0
            } else {
                1.0 - (d - min) as f64 / (max - min) as f64
            }
        })
        .collect();
    let labels: Arc<[LanguageTag]> = candidates.iter().map(|p| p.language.clone()).collect();
    ScoreVector::new(labels, scores, ScoreKind::Scaled).expect("aligned and finite")
}
