//! Sentence-level examples and the token-to-sentence relabeling rule.
//!
//! Token-annotated corpora become one example per sentence: the gold set
//! is every distinct language among the token tags. A sentence with no
//! language-tagged token (only named entities, emoji, ...) is discarded.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::tag::{LabelSet, LanguageTag};

/// A sentence with a non-empty gold label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    text: String,
    gold: LabelSet,
}

impl Example {
    /// Returns `None` when `gold` is empty.
    pub fn new(text: String, gold: LabelSet) -> Option<Self> {
        if gold.is_empty() {
            None
        } else {
            Some(Self { text, gold })
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn gold(&self) -> &LabelSet {
        &self.gold
    }

    pub fn is_code_switched(&self) -> bool {
        self.gold.len() >= 2
    }

    pub fn into_parts(self) -> (String, LabelSet) {
        (self.text, self.gold)
    }
}

/// A sentence annotated token by token with raw source tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenTaggedSentence {
    tokens: Vec<(String, String)>,
}

impl TokenTaggedSentence {
    /// Returns `None` for an empty token list.
    pub fn new(tokens: Vec<(String, String)>) -> Option<Self> {
        if tokens.is_empty() {
            None
        } else {
            Some(Self { tokens })
        }
    }

    pub fn tokens(&self) -> &[(String, String)] {
        &self.tokens
    }
}

/// Maps a corpus's raw tags to language tags.
///
/// A raw tag missing from the map, or mapped to nothing, is a non-language
/// tag. One raw tag may map to several languages (an utterance marked
/// `mixed`, say).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagMap {
    map: BTreeMap<String, Vec<LanguageTag>>,
}

impl TagMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, raw: impl Into<String>, targets: Vec<LanguageTag>) {
        self.map.insert(raw.into(), targets);
    }

    pub fn get(&self, raw: &str) -> &[LanguageTag] {
        self.map.get(raw).map_or(&[], Vec::as_slice)
    }

    pub fn is_language(&self, raw: &str) -> bool {
        !self.get(raw).is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[LanguageTag])> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

impl FromIterator<(String, Vec<LanguageTag>)> for TagMap {
    fn from_iter<I: IntoIterator<Item = (String, Vec<LanguageTag>)>>(iter: I) -> Self {
        Self {
            map: iter.into_iter().collect(),
        }
    }
}

/// Relabels a token-tagged sentence. The text is every token surface joined
/// by single spaces; `None` means the sentence carries no language and is
/// discarded.
pub fn to_sentence_level(sentence: &TokenTaggedSentence, tags: &TagMap) -> Option<Example> {
    let gold: LabelSet = sentence
        .tokens
        .iter()
        .flat_map(|(_, tag)| tags.get(tag).iter().cloned())
        .collect();
    let mut text = String::new();
    for (i, (surface, _)) in sentence.tokens.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        text.push_str(surface);
    }
    Example::new(text, gold)
}

/// Fraction of examples with two or more gold labels; 0 for no examples.
pub fn cs_proportion(examples: &[Example]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let cs = examples.iter().filter(|e| e.is_code_switched()).count();
    cs as f64 / examples.len() as f64
}
