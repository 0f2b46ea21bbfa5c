//! The label universe and normalization of foreign language codes into it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;
use thiserror::Error;

use crate::tag::{LanguageTag, TagError};

const DEFAULT_UNIVERSE: &str = include_str!("../data/flores200_star.txt");
const DEFAULT_ALIASES: &str = include_str!("../data/aliases.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniverseError {
    #[error("line {line}: {source}")]
    Tag { line: usize, source: TagError },
    #[error("line {line}: expected `raw<TAB>target`")]
    AliasSyntax { line: usize },
    #[error("duplicate tag {0} in universe")]
    DuplicateTag(LanguageTag),
    #[error("alias {raw:?} targets {target}, which is not in the universe")]
    AliasTarget { raw: String, target: LanguageTag },
    #[error("label universe is empty")]
    Empty,
}

/// The ordered set of tags a classifier may emit, plus aliases for
/// foreign codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelUniverse {
    tags: Vec<LanguageTag>,
    index: HashMap<LanguageTag, usize>,
    aliases: BTreeMap<String, LanguageTag>,
}

impl LabelUniverse {
    /// Fails on duplicate tags or on an alias whose target is not a tag.
    pub fn new(tags: Vec<LanguageTag>, aliases: BTreeMap<String, LanguageTag>) -> Result<Self, UniverseError> {
        if tags.is_empty() {
            return Err(UniverseError::Empty);
        }
        let mut index = HashMap::with_capacity(tags.len());
        for (i, t) in tags.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(UniverseError::DuplicateTag(t.clone()));
            }
        }
        for (raw, target) in &aliases {
            if !index.contains_key(target) {
                return Err(UniverseError::AliasTarget {
                    raw: raw.clone(),
                    target: target.clone(),
                });
            }
        }
        Ok(Self { tags, index, aliases })
    }

    /// The tags with every shipped alias whose target they contain.
    pub fn with_default_aliases(tags: Vec<LanguageTag>) -> Result<Self, UniverseError> {
        let mut universe = Self::new(tags, BTreeMap::new())?;
        let aliases = parse_aliases(DEFAULT_ALIASES).expect("shipped alias table parses");
        universe.aliases = aliases
            .into_iter()
            .filter(|(_, t)| universe.index.contains_key(t))
            .collect();
        Ok(universe)
    }

    /// The 201-variety FLORES-200 evaluation universe with shipped aliases.
    pub fn flores200_star() -> Self {
        let tags = parse_tag_list(DEFAULT_UNIVERSE).expect("shipped universe parses");
        Self::with_default_aliases(tags).expect("shipped universe is valid")
    }

    pub fn tags(&self) -> &[LanguageTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.index.contains_key(tag)
    }

    pub fn aliases(&self) -> &BTreeMap<String, LanguageTag> {
        &self.aliases
    }

    /// Maps a raw code to a universe tag: itself if it is one, its alias
    /// target if it has one, otherwise `None` (an empty prediction).
    pub fn normalize(&self, raw: &str) -> Option<LanguageTag> {
        let raw = raw.trim();
        if let Some(&i) = self.index.get(raw) {
            return Some(self.tags[i].clone());
        }
        self.aliases.get(raw).cloned()
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// One tag per line; blank lines and `#` comments are skipped.
pub fn parse_tag_list(text: &str) -> Result<Vec<LanguageTag>, UniverseError> {
    content_lines(text)
        .map(|(line, l)| LanguageTag::new(l.trim()).map_err(|source| UniverseError::Tag { line, source }))
        .collect()
}

/// `raw<TAB>target` per line; blank lines and `#` comments are skipped.
pub fn parse_aliases(text: &str) -> Result<BTreeMap<String, LanguageTag>, UniverseError> {
    content_lines(text)
        .map(|(line, l)| {
            let (raw, target) = l.split_once('\t').ok_or(UniverseError::AliasSyntax { line })?;
            if raw.is_empty() || target.contains('\t') {
                return Err(UniverseError::AliasSyntax { line });
            }
            let target = LanguageTag::new(target.trim()).map_err(|source| UniverseError::Tag { line, source })?;
            Ok((String::from(raw.trim()), target))
        })
        .collect()
}
