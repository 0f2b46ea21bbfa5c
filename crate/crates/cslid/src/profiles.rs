//! Trigram profile files: one `tag<TAB>script<TAB>trigram:rank;…` line per
//! language. Every trigram is exactly three characters, so the separators
//! may also appear inside trigrams.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use cslid_core::tag::LanguageTag;
use cslid_core::textprep;
use cslid_core::trigram::{detect_script, parse_script, ProfileError, ProfileSet, TrigramCounter, TrigramProfile};
use cslid_core::Example;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Profile { line: usize, source: ProfileError },
    #[error(transparent)]
    Set(ProfileError),
}

pub fn write_profiles(set: &ProfileSet, mut out: impl Write) -> io::Result<()> {
    for p in set.profiles() {
        write!(out, "{}\t{}\t", p.language(), p.script().short_name())?;
        for (rank, t) in p.ranks().iter().enumerate() {
            if rank > 0 {
                out.write_all(b";")?;
            }
            write!(out, "{t}:{rank}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_ranks(field: &str) -> Result<Vec<String>, String> {
    let mut entries: Vec<(usize, String)> = Vec::new();
    let mut rest = field;
    while !rest.is_empty() {
        let split = rest.char_indices().nth(3).map_or(rest.len(), |(i, _)| i);
        let (trigram, tail) = rest.split_at(split);
        if trigram.chars().count() != 3 {
            return Err(format!("short trigram {trigram:?}"));
        }
        let tail = tail
            .strip_prefix(':')
            .ok_or_else(|| format!("expected ':' after {trigram:?}"))?;
        let end = tail.find(';').unwrap_or(tail.len());
        let rank: usize = tail[..end]
            .parse()
            .map_err(|_| format!("bad rank {:?} for {trigram:?}", &tail[..end]))?;
        entries.push((rank, trigram.to_string()));
        rest = tail.get(end + 1..).unwrap_or("");
    }
    entries.sort();
    for (i, (rank, t)) in entries.iter().enumerate() {
        if *rank != i {
            return Err(format!("ranks are not 0..{}: {t:?} has rank {rank}", entries.len()));
        }
    }
    Ok(entries.into_iter().map(|(_, t)| t).collect())
}

pub fn read_profiles(input: impl BufRead, size: usize) -> Result<ProfileSet, ProfileFileError> {
    let mut profiles = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| ProfileFileError::Syntax { line: line_no, message };
        let mut fields = line.splitn(3, '\t');
        let (Some(tag), Some(script), Some(ranks)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(syntax("expected tag, script and ranks".into()));
        };
        let tag = LanguageTag::new(tag).map_err(|e| syntax(e.to_string()))?;
        let script = parse_script(script).map_err(|source| ProfileFileError::Profile { line: line_no, source })?;
        let ranks = parse_ranks(ranks).map_err(syntax)?;
        let p = TrigramProfile::new(tag, script, ranks, size)
            .map_err(|source| ProfileFileError::Profile { line: line_no, source })?;
        profiles.push(p);
    }
    ProfileSet::new(profiles, size).map_err(ProfileFileError::Set)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProfileTrainStats {
    pub used: usize,
    /// Multi-label examples, which cannot be attributed to one language.
    pub skipped_multi: usize,
    /// Languages left out because their text has no majority script.
    pub no_script: Vec<LanguageTag>,
}

/// One profile per gold language from the single-label examples.
///
/// The script comes from the tag's script subtag when it names a Unicode
/// script, otherwise from the majority script of the language's text.
pub fn train_profiles(examples: &[Example], size: usize) -> Result<(ProfileSet, ProfileTrainStats), ProfileError> {
    let mut stats = ProfileTrainStats::default();
    let mut texts: BTreeMap<&LanguageTag, (TrigramCounter, String)> = BTreeMap::new();
    for ex in examples {
        if ex.gold().len() != 1 {
            stats.skipped_multi += 1;
            continue;
        }
        stats.used += 1;
        let tag = ex.gold().iter().next().expect("one label");
        let cleaned = textprep::clean(ex.text());
        let (counter, sample) = texts.entry(tag).or_default();
        counter.add(&cleaned);
        if sample.len() < 100_000 {
            sample.push_str(&cleaned);
            sample.push(' ');
        }
    }
    let mut profiles = Vec::new();
    for (tag, (counter, sample)) in texts {
        let script = match tag.script().and_then(|s| parse_script(s).ok()) {
            Some(s) => s,
            None => match detect_script(&sample) {
                Some(s) => s,
                None => {
                    stats.no_script.push(tag.clone());
                    continue;
                }
            },
        };
        profiles.push(TrigramProfile::new(tag.clone(), script, counter.ranks(size), size)?);
    }
    Ok((ProfileSet::new(profiles, size)?, stats))
}
