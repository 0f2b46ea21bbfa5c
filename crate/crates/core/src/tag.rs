//! Language tags and label sets.

use alloc::collections::btree_set::{self, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("empty language tag")]
    Empty,
    #[error("language tag {0:?} contains whitespace or a comma")]
    InvalidChar(String),
}

/// A language variety plus script code such as `eng_Latn`.
///
/// Tags are opaque beyond the optional `_Script` suffix; they must be
/// non-empty and contain no whitespace or commas, since label sets are
/// written comma-joined.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageTag(String);

impl LanguageTag {
    pub fn new(tag: impl Into<String>) -> Result<Self, TagError> {
        let tag = tag.into();
        if tag.is_empty() {
            return Err(TagError::Empty);
        }
        if tag.chars().any(|c| c.is_whitespace() || c == ',') {
            return Err(TagError::InvalidChar(tag));
        }
        Ok(Self(tag))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The language part, before the last `_`.
    pub fn language(&self) -> &str {
        self.0.rsplit_once('_').map_or(&self.0, |(lang, _)| lang)
    }

    /// The script subtag, if the tag carries one.
    pub fn script(&self) -> Option<&str> {
        self.0.rsplit_once('_').map(|(_, script)| script)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageTag {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl AsRef<str> for LanguageTag {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl core::borrow::Borrow<str> for LanguageTag {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// An unordered, duplicate-free set of tags. Gold sets are non-empty;
/// predicted sets may be empty.
///
/// Iteration and ordering are lexicographic over the sorted tags, which
/// makes every derived output deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelSet(BTreeSet<LanguageTag>);

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, tag: LanguageTag) -> bool {
        self.0.insert(tag)
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.0.contains(tag)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_set::Iter<'_, LanguageTag> {
        self.0.iter()
    }

    pub fn is_superset(&self, other: &LabelSet) -> bool {
        self.0.is_superset(&other.0)
    }

    /// Parses a comma-separated list; the empty string is the empty set.
    pub fn parse_joined(s: &str) -> Result<Self, TagError> {
        s.split(',')
            .filter(|part| !part.is_empty())
            .map(LanguageTag::new)
            .collect()
    }
}

impl fmt::Display for LabelSet {
    /// Comma-joined, empty for the empty set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tag) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(tag.as_str())?;
        }
        Ok(())
    }
}

impl FromIterator<LanguageTag> for LabelSet {
    fn from_iter<I: IntoIterator<Item = LanguageTag>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a LabelSet {
    type Item = &'a LanguageTag;
    type IntoIter = btree_set::Iter<'a, LanguageTag>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl IntoIterator for LabelSet {
    type Item = LanguageTag;
    type IntoIter = btree_set::IntoIter<LanguageTag>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl Extend<LanguageTag> for LabelSet {
    fn extend<I: IntoIterator<Item = LanguageTag>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

/// Builds a label set from string literals, panicking on invalid tags.
/// Intended for tests and fixtures.
pub fn labels<S: AsRef<str>>(tags: &[S]) -> LabelSet {
    tags.iter()
        .map(|t| LanguageTag::new(t.as_ref().to_string()).expect("valid tag"))
        .collect()
}

/// Like [`labels`] but keeps order and duplicates.
pub fn tags_from<S: AsRef<str>>(tags: &[S]) -> Vec<LanguageTag> {
    tags.iter()
        .map(|t| LanguageTag::new(t.as_ref().to_string()).expect("valid tag"))
        .collect()
}
