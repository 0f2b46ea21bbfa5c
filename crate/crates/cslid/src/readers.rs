//! Dataset readers for token-tagged TSV, `__label__` lines and
//! utterance-level JSON, driven by small TOML configs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::Path;

use cslid_core::datasets::{to_sentence_level, TagMap, TokenTaggedSentence};
use cslid_core::tag::{LabelSet, LanguageTag};
use cslid_core::{Example, LabelUniverse};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

pub const LABEL_PREFIX: &str = "__label__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `token<TAB>tag` per line, blank line between sentences.
    TokenTsv,
    /// `__label__<tag>` prefixes, then the text.
    LabeledLines,
    /// JSON lines or a JSON array of objects with text and label fields.
    UtteranceJson,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub name: String,
    pub format: DatasetFormat,
    /// Raw tag to language tags; an empty list marks a non-language tag.
    #[serde(default)]
    pub tags: BTreeMap<String, Vec<String>>,
    /// Zero-based token and tag columns for `token-tsv`.
    #[serde(default)]
    pub token_column: usize,
    #[serde(default = "default_tag_column")]
    pub tag_column: usize,
    #[serde(default = "default_text_field")]
    pub text_field: String,
    #[serde(default = "default_labels_field")]
    pub labels_field: String,
    /// Splits a string label such as `eu-es` into several raw tags.
    #[serde(default)]
    pub label_separator: Option<String>,
}

fn default_tag_column() -> usize {
    1
}

fn default_text_field() -> String {
    "text".into()
}

fn default_labels_field() -> String {
    "labels".into()
}

impl DatasetConfig {
    pub fn new(format: DatasetFormat) -> Self {
        Self {
            name: String::new(),
            format,
            tags: BTreeMap::new(),
            token_column: 0,
            tag_column: default_tag_column(),
            text_field: default_text_field(),
            labels_field: default_labels_field(),
            label_separator: None,
        }
    }

    pub fn labeled_lines() -> Self {
        Self::new(DatasetFormat::LabeledLines)
    }

    pub fn from_toml(text: &str) -> Result<Self, ReadError> {
        toml::from_str(text).map_err(|e| ReadError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ReadError> {
        let text = fs::read_to_string(path).map_err(|e| ReadError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ReadError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("dataset config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub examples: usize,
    /// Records without any language label.
    pub discarded: usize,
    /// Records skipped in lenient mode.
    pub malformed: usize,
    /// Raw tags that are neither configured nor normalizable, with counts.
    pub unmappable: BTreeMap<String, usize>,
}

/// Resolves raw tags: the config's tag map first, then the universe's
/// normalization. Anything else is unmappable and counts as no language.
/// Without a universe, any well-formed raw tag is taken as is.
#[derive(Debug, Clone)]
pub struct TagResolver {
    map: TagMap,
    configured: BTreeMap<String, ()>,
    universe: Option<LabelUniverse>,
}

impl TagResolver {
    pub fn new(config: &DatasetConfig, universe: Option<LabelUniverse>) -> Result<Self, ReadError> {
        let mut map = TagMap::new();
        for (raw, targets) in &config.tags {
            let tags = targets
                .iter()
                .map(|t| {
                    let tag = LanguageTag::new(t.as_str()).map_err(|e| ReadError::Config(format!("{raw}: {e}")))?;
                    if universe.as_ref().is_none_or(|u| u.contains(tag.as_str())) {
                        Ok(tag)
                    } else {
                        Err(ReadError::Config(format!(
                            "{raw} maps to {tag}, which is not in the universe"
                        )))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            map.insert(raw.clone(), tags);
        }
        let configured = config.tags.keys().map(|k| (k.clone(), ())).collect();
        Ok(Self {
            map,
            configured,
            universe,
        })
    }

    /// `None` for an unmappable tag.
    pub fn resolve(&self, raw: &str) -> Option<Vec<LanguageTag>> {
        if self.configured.contains_key(raw) {
            return Some(self.map.get(raw).to_vec());
        }
        match &self.universe {
            Some(u) => u.normalize(raw).map(|t| vec![t]),
            None => LanguageTag::new(raw).ok().map(|t| vec![t]),
        }
    }

    pub fn universe(&self) -> Option<&LabelUniverse> {
        self.universe.as_ref()
    }
}

enum Source<R> {
    Lines(io::Lines<R>),
    Json(std::vec::IntoIter<(usize, Value)>),
}

/// Streams examples from one input in file order.
///
/// In strict mode a malformed record yields an error; in lenient mode it is
/// counted and skipped.
pub struct DatasetReader<R> {
    config: DatasetConfig,
    resolver: TagResolver,
    strict: bool,
    source: Source<R>,
    line: usize,
    stats: ReadStats,
    done: bool,
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(
        mut input: R,
        config: DatasetConfig,
        universe: Option<LabelUniverse>,
        strict: bool,
    ) -> Result<Self, ReadError> {
        let resolver = TagResolver::new(&config, universe)?;
        let source = if config.format == DatasetFormat::UtteranceJson && starts_with_bracket(&mut input)? {
            let mut text = String::new();
            input.read_to_string(&mut text)?;
            let items: Vec<Value> = serde_json::from_str(&text).map_err(|e| ReadError::Format {
                line: e.line(),
                message: e.to_string(),
            })?;
            // array elements are numbered from 1 in place of line numbers
            Source::Json(
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (i + 1, v))
                    .collect::<Vec<_>>()
                    .into_iter(),
            )
        } else {
            Source::Lines(input.lines())
        };
        Ok(Self {
            config,
            resolver,
            strict,
            source,
            line: 0,
            stats: ReadStats::default(),
            done: false,
        })
    }

    pub fn stats(&self) -> &ReadStats {
        &self.stats
    }

    pub fn into_stats(self) -> ReadStats {
        self.stats
    }

    fn resolve_all<'a>(&mut self, raws: impl IntoIterator<Item = &'a str>) -> LabelSet {
        let mut gold = LabelSet::new();
        for raw in raws {
            match self.resolver.resolve(raw) {
                Some(tags) => gold.extend(tags),
                None => *self.stats.unmappable.entry(raw.to_string()).or_insert(0) += 1,
            }
        }
        gold
    }

    fn next_line(&mut self) -> Option<io::Result<String>> {
        let Source::Lines(lines) = &mut self.source else {
            return None;
        };
        let l = lines.next()?;
        self.line += 1;
        Some(l.map(|mut s| {
            if s.ends_with('\r') {
                s.pop();
            }
            s
        }))
    }

    fn token_sentence(&mut self) -> Option<Result<Option<Example>, ReadError>> {
        let mut tokens: Vec<(String, String)> = Vec::new();
        let mut raw_tags: Vec<String> = Vec::new();
        let mut malformed: Option<ReadError> = None;
        loop {
            match self.next_line() {
                None => break,
                Some(Err(e)) => return Some(Err(e.into())),
                Some(Ok(line)) => {
                    if line.trim().is_empty() {
                        if tokens.is_empty() && malformed.is_none() {
                            continue;
                        }
                        break;
                    }
                    let cols: Vec<&str> = line.split('\t').collect();
                    let (Some(tok), Some(tag)) = (cols.get(self.config.token_column), cols.get(self.config.tag_column))
                    else {
                        malformed.get_or_insert(ReadError::Format {
                            line: self.line,
                            message: format!(
                                "expected at least {} tab-separated columns",
                                self.config.tag_column.max(self.config.token_column) + 1
                            ),
                        });
                        continue;
                    };
                    tokens.push((tok.to_string(), tag.trim().to_string()));
                    raw_tags.push(tag.trim().to_string());
                }
            }
        }
        if let Some(err) = malformed {
            return Some(Err(err));
        }
        if tokens.is_empty() {
            return None;
        }
        // resolve every tag once per sentence so warnings are counted
        let mut map = TagMap::new();
        for raw in &raw_tags {
            if map.iter().any(|(k, _)| k == raw) {
                continue;
            }
            let tags = self.resolve_all([raw.as_str()]);
            map.insert(raw.clone(), tags.into_iter().collect());
        }
        let sentence = TokenTaggedSentence::new(tokens).expect("non-empty");
        Some(Ok(to_sentence_level(&sentence, &map)))
    }

    fn labeled_line(&mut self) -> Option<Result<Option<Example>, ReadError>> {
        loop {
            let line = match self.next_line()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            if line.trim().is_empty() {
                continue;
            }
            let (raws, text) = match split_labels(&line) {
                Ok(v) => v,
                Err(message) => {
                    return Some(Err(ReadError::Format {
                        line: self.line,
                        message,
                    }))
                }
            };
            let gold = self.resolve_all(raws);
            return Some(Ok(Example::new(text.to_string(), gold)));
        }
    }

    fn json_record(&mut self) -> Option<Result<Option<Example>, ReadError>> {
        let (line, value) = match &mut self.source {
            Source::Json(items) => items.next()?,
            Source::Lines(_) => loop {
                let l = match self.next_line()? {
                    Ok(l) => l,
                    Err(e) => return Some(Err(e.into())),
                };
                if l.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Value>(&l) {
                    Ok(v) => break (self.line, v),
                    Err(e) => {
                        return Some(Err(ReadError::Format {
                            line: self.line,
                            message: e.to_string(),
                        }))
                    }
                }
            },
        };
        let fail = |message: String| Some(Err(ReadError::Format { line, message }));
        let Some(text) = value.get(&self.config.text_field).and_then(Value::as_str) else {
            return fail(format!("missing string field {:?}", self.config.text_field));
        };
        let raws: Vec<String> = match value.get(&self.config.labels_field) {
            Some(Value::String(s)) => self.split_label(s),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for item in items {
                    match item.as_str() {
                        Some(s) => out.extend(self.split_label(s)),
                        None => return fail(format!("non-string label in {:?}", self.config.labels_field)),
                    }
                }
                out
            }
            _ => return fail(format!("missing label field {:?}", self.config.labels_field)),
        };
        let text = text.to_string();
        let gold = self.resolve_all(raws.iter().map(String::as_str));
        Some(Ok(Example::new(text, gold)))
    }

    fn split_label(&self, s: &str) -> Vec<String> {
        match &self.config.label_separator {
            Some(sep) => s
                .split(sep.as_str())
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect(),
            None => vec![s.trim().to_string()],
        }
    }
}

fn starts_with_bracket(input: &mut impl BufRead) -> io::Result<bool> {
    loop {
        let buf = input.fill_buf()?;
        if buf.is_empty() {
            return Ok(false);
        }
        let ws = buf.iter().take_while(|b| b.is_ascii_whitespace()).count();
        if ws < buf.len() {
            return Ok(buf[ws] == b'[');
        }
        let n = buf.len();
        input.consume(n);
    }
}

/// Splits a labeled line into its raw labels and the text after them.
pub fn split_labels(line: &str) -> Result<(Vec<&str>, &str), String> {
    let mut labels = Vec::new();
    let mut rest = line.trim_start();
    while let Some(after) = rest.strip_prefix(LABEL_PREFIX) {
        let end = after.find(char::is_whitespace).unwrap_or(after.len());
        if end == 0 {
            return Err("empty label after __label__".into());
        }
        labels.push(&after[..end]);
        rest = after[end..].trim_start();
    }
    if labels.is_empty() {
        return Err("line has no __label__ prefix".into());
    }
    Ok((labels, rest))
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<Example, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let record = match self.config.format {
                DatasetFormat::TokenTsv => self.token_sentence(),
                DatasetFormat::LabeledLines => self.labeled_line(),
                DatasetFormat::UtteranceJson => self.json_record(),
            };
            match record {
                None => self.done = true,
                Some(Ok(Some(ex))) => {
                    self.stats.examples += 1;
                    return Some(Ok(ex));
                }
                Some(Ok(None)) => self.stats.discarded += 1,
                Some(Err(ReadError::Io(e))) => {
                    self.done = true;
                    return Some(Err(ReadError::Io(e)));
                }
                Some(Err(e)) => {
                    if self.strict {
                        return Some(Err(e));
                    }
                    self.stats.malformed += 1;
                }
            }
        }
        None
    }
}

/// Reads a whole dataset, stopping at the first error in strict mode.
pub fn read_dataset(
    input: impl BufRead,
    config: DatasetConfig,
    universe: Option<LabelUniverse>,
    strict: bool,
) -> Result<(Vec<Example>, ReadStats), ReadError> {
    let mut reader = DatasetReader::new(input, config, universe, strict)?;
    let examples = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((examples, reader.into_stats()))
}

/// Writes an example as a labeled line.
pub fn format_labeled(example: &Example) -> String {
    let mut out = String::new();
    for tag in example.gold() {
        out.push_str(LABEL_PREFIX);
        out.push_str(tag.as_str());
        out.push(' ');
    }
    out.push_str(&example.text().replace(['\n', '\r'], " "));
    out
}
