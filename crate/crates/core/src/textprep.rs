//! Text cleaning, tokenization, character n-grams and vocabularies.
//!
//! Both classifiers see text only after [`clean`]: NFC-normalized, with `#`
//! and emoji removed and whitespace collapsed. Case is preserved.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;
use unicode_properties::emoji::{EmojiStatus, UnicodeEmoji};

const ZWJ: char = '\u{200D}';
const VS15: char = '\u{FE0E}';
const VS16: char = '\u{FE0F}';

fn is_emoji_presentation(c: char) -> bool {
    matches!(
        c.emoji_status(),
        EmojiStatus::EmojiPresentation
            | EmojiStatus::EmojiPresentationAndModifierBase
            | EmojiStatus::EmojiPresentationAndEmojiComponent
            | EmojiStatus::EmojiPresentationAndModifierAndEmojiComponent
    )
}

fn is_dropped(c: char) -> bool {
    c == '#' || c == VS15 || c == VS16 || (!c.is_ascii() && is_emoji_presentation(c))
}

/// Normalizes raw text for feature extraction.
///
/// Removes `#`, every `Emoji_Presentation` code point, both variation
/// selectors, and zero-width joiners adjacent to removed code points.
/// Whitespace runs become one space and the ends are trimmed.
pub fn clean(text: &str) -> String {
    let chars: Vec<char> = text.nfc().collect();
    let mut drop: Vec<bool> = chars.iter().map(|&c| is_dropped(c)).collect();

    // A run of joiners goes when either neighbour of the run went.
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != ZWJ {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i] == ZWJ {
            i += 1;
        }
        let before = start > 0 && drop[start - 1];
        let after = i < chars.len() && drop[i];
        if before || after {
            drop[start..i].iter_mut().for_each(|d| *d = true);
        }
    }

    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    let mut dropped_any = false;
    for (&c, &d) in chars.iter().zip(&drop) {
        if d {
            dropped_any = true;
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    if dropped_any {
        // removal can bring a base and a combining mark together
        out.nfc().collect()
    } else {
        out
    }
}

/// A whitespace-free, non-empty word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    /// Returns `None` for empty input or input containing whitespace.
    pub fn new(surface: impl Into<String>) -> Option<Self> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            None
        } else {
            Some(Self(surface))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Splits cleaned text on Unicode whitespace.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace().map(|w| Token(String::from(w))).collect()
}

/// `clean` followed by `tokenize`.
pub fn prepare(text: &str) -> Vec<Token> {
    tokenize(&clean(text))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("no word occurs more than {min_word_count} times")]
    EmptyVocabulary { min_word_count: u64 },
    #[error("invalid n-gram range {lo}..={hi}")]
    InvalidRange { lo: usize, hi: usize },
    #[error("minimum word count must be at least 1")]
    InvalidMinCount,
    #[error("duplicate {kind} entry {entry:?}")]
    Duplicate { kind: EntryKind, entry: String },
    #[error("invalid word entry {0:?}")]
    InvalidWord(String),
    #[error("n-gram {entry:?} has {len} code points, outside {lo}..={hi}")]
    NgramLength {
        entry: String,
        len: usize,
        lo: usize,
        hi: usize,
    },
    #[error("vocabulary has {0} entries, more than a u32 index allows")]
    TooLarge(usize),
}

/// Inclusive range of n-gram lengths, in code points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgramRange {
    lo: usize,
    hi: usize,
}

impl NgramRange {
    pub const DEFAULT: NgramRange = NgramRange { lo: 2, hi: 5 };

    pub fn new(lo: usize, hi: usize) -> Result<Self, VocabError> {
        if lo < 1 || lo > hi {
            return Err(VocabError::InvalidRange { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.lo..=self.hi).contains(&n)
    }
}

impl Default for NgramRange {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Calls `f` with every n-gram of `<word>`, shortest first, left to right.
///
/// `buf` and `bounds` are scratch space reused across calls.
fn for_each_ngram(word: &str, range: NgramRange, buf: &mut String, bounds: &mut Vec<usize>, mut f: impl FnMut(&str)) {
    buf.clear();
    buf.push('<');
    buf.push_str(word);
    buf.push('>');
    bounds.clear();
    bounds.extend(buf.char_indices().map(|(i, _)| i));
    bounds.push(buf.len());
    let chars = bounds.len() - 1;
    for n in range.lo..=range.hi {
        if n > chars {
            break;
        }
        for start in 0..=chars - n {
            f(&buf[bounds[start]..bounds[start + n]]);
        }
    }
}

/// All contiguous n-grams of the word wrapped in `<` and `>`, grouped by
/// length (shortest first) and left to right within a length. Duplicates
/// are kept.
pub fn char_ngrams(word: &str, range: NgramRange) -> Vec<String> {
    let mut out = Vec::new();
    let (mut buf, mut bounds) = (String::new(), Vec::new());
    for_each_ngram(word, range, &mut buf, &mut bounds, |g| out.push(String::from(g)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Word,
    Ngram,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::Word => "word",
            EntryKind::Ngram => "ngram",
        })
    }
}

/// Word and n-gram entries with dense indices: words occupy
/// `0..num_words`, n-grams the indices after them.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    range: NgramRange,
    entries: Vec<String>,
    num_words: usize,
    words: HashMap<String, u32>,
    ngrams: HashMap<String, u32>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.range == other.range && self.num_words == other.num_words && self.entries == other.entries
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    /// Builds a vocabulary with entries indexed in the given order.
    pub fn from_parts(words: Vec<String>, ngrams: Vec<String>, range: NgramRange) -> Result<Self, VocabError> {
        let total = words.len() + ngrams.len();
        if total > u32::MAX as usize {
            return Err(VocabError::TooLarge(total));
        }
        let mut word_map = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(VocabError::InvalidWord(w.clone()));
            }
            if word_map.insert(w.clone(), i as u32).is_some() {
                return Err(VocabError::Duplicate {
                    kind: EntryKind::Word,
                    entry: w.clone(),
                });
            }
        }
        let mut ngram_map = HashMap::with_capacity(ngrams.len());
        for (i, g) in ngrams.iter().enumerate() {
            let len = g.chars().count();
            if !range.contains(len) {
                return Err(VocabError::NgramLength {
                    entry: g.clone(),
                    len,
                    lo: range.lo,
                    hi: range.hi,
                });
            }
            if ngram_map.insert(g.clone(), (words.len() + i) as u32).is_some() {
                return Err(VocabError::Duplicate {
                    kind: EntryKind::Ngram,
                    entry: g.clone(),
                });
            }
        }
        let num_words = words.len();
        let mut entries = words;
        entries.extend(ngrams);
        Ok(Self {
            range,
            entries,
            num_words,
            words: word_map,
            ngrams: ngram_map,
        })
    }

    pub fn range(&self) -> NgramRange {
        self.range
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn num_ngrams(&self) -> usize {
        self.entries.len() - self.num_words
    }

    pub fn word_index(&self, word: &str) -> Option<u32> {
        self.words.get(word).copied()
    }

    pub fn ngram_index(&self, ngram: &str) -> Option<u32> {
        self.ngrams.get(ngram).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.entries[..self.num_words]
    }

    pub fn ngrams(&self) -> &[String] {
        &self.entries[self.num_words..]
    }

    /// Entries in index order with their kind.
    pub fn iter(&self) -> impl Iterator<Item = (u32, EntryKind, &str)> + '_ {
        self.entries.iter().enumerate().map(move |(i, e)| {
            let kind = if i < self.num_words {
                EntryKind::Word
            } else {
                EntryKind::Ngram
            };
            (i as u32, kind, e.as_str())
        })
    }
}

/// Single-pass word counter feeding [`Vocabulary`] construction.
#[derive(Debug, Clone, Default)]
pub struct VocabularyBuilder {
    counts: HashMap<String, u64>,
}

impl VocabularyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<T: AsRef<str>>(&mut self, tokens: &[T]) {
        for t in tokens {
            if let Some(c) = self.counts.get_mut(t.as_ref()) {
                *c += 1;
            } else {
                self.counts.insert(String::from(t.as_ref()), 1);
            }
        }
    }

    /// Merges counts from another builder, e.g. one filled on another thread.
    pub fn merge(&mut self, other: VocabularyBuilder) {
        for (w, c) in other.counts {
            *self.counts.entry(w).or_insert(0) += c;
        }
    }

    /// Keeps words seen strictly more than `min_word_count` times, plus
    /// every n-gram of a kept word. Indices are assigned in lexicographic
    /// order, words first.
    pub fn build(self, min_word_count: u64, range: NgramRange) -> Result<Vocabulary, VocabError> {
        if min_word_count < 1 {
            return Err(VocabError::InvalidMinCount);
        }
        let mut words: Vec<String> = self
            .counts
            .into_iter()
            .filter(|&(_, c)| c > min_word_count)
            .map(|(w, _)| w)
            .collect();
        if words.is_empty() {
            return Err(VocabError::EmptyVocabulary { min_word_count });
        }
        words.sort_unstable();

        let mut seen: hashbrown::HashSet<String> = hashbrown::HashSet::new();
        let (mut buf, mut bounds) = (String::new(), Vec::new());
        for w in &words {
            for_each_ngram(w, range, &mut buf, &mut bounds, |g| {
                if !seen.contains(g) {
                    seen.insert(String::from(g));
                }
            });
        }
        let mut ngrams: Vec<String> = seen.into_iter().collect();
        ngrams.sort_unstable();
        Vocabulary::from_parts(words, ngrams, range)
    }
}

/// Counts words over a tokenized corpus and builds the vocabulary.
pub fn build_vocabulary<I, S>(corpus: I, min_word_count: u64, range: NgramRange) -> Result<Vocabulary, VocabError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[Token]>,
{
    let mut builder = VocabularyBuilder::new();
    for sentence in corpus {
        builder.add(sentence.as_ref());
    }
    builder.build(min_word_count, range)
}

/// A multiset of vocabulary indices, kept sorted so that equal multisets
/// compare and sum identically regardless of construction order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureBag(Vec<u32>);

impl FeatureBag {
    pub fn from_indices(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        Self(indices)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiplicity of an index.
    pub fn count(&self, index: u32) -> usize {
        let start = self.0.partition_point(|&i| i < index);
        let end = self.0.partition_point(|&i| i <= index);
        end - start
    }
}

/// Maps tokens to vocabulary indices: the word itself when known, plus
/// every known n-gram of the word, known word or not.
pub fn featurize<T: AsRef<str>>(tokens: &[T], vocab: &Vocabulary) -> FeatureBag {
    let mut indices = Vec::with_capacity(tokens.len() * 8);
    let (mut buf, mut bounds) = (String::new(), Vec::new());
    for t in tokens {
        let t = t.as_ref();
        if let Some(i) = vocab.word_index(t) {
            indices.push(i);
        }
        for_each_ngram(t, vocab.range, &mut buf, &mut bounds, |g| {
            if let Some(i) = vocab.ngram_index(g) {
                indices.push(i);
            }
        });
    }
    FeatureBag::from_indices(indices)
}
