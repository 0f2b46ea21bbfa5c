//! Binary model files and vocabulary export.
//!
//! Layout, all integers little-endian: magic `CSLID`, version `u32`, loss
//! mode `u8`, then `dim`, label count, word count and n-gram count as
//! `u32`; the labels and the vocabulary (words, then n-grams) as
//! `u32`-length-prefixed UTF-8; finally the embedding and output matrices
//! as row-major `f32`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use cslid_core::model::{LinearModel, LossMode};
use cslid_core::tag::LanguageTag;
use cslid_core::textprep::{NgramRange, Vocabulary};
use thiserror::Error;

pub const MAGIC: &[u8; 5] = b"CSLID";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected \"CSLID\"")]
    BadMagic { found: String },
    #[error("unsupported version {version} at byte {offset}")]
    Version { version: u32, offset: usize },
    #[error("truncated at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid UTF-8 string at byte {offset}")]
    Utf8 { offset: usize },
    #[error("at byte {offset}: {message}")]
    Invalid { offset: usize, message: String },
    #[error("{extra} trailing bytes after byte {offset}")]
    Trailing { offset: usize, extra: usize },
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let remaining = self.bytes.len() - self.pos;
        if n > remaining {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - remaining,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self) -> Result<String, FormatError> {
        let len = self.u32()? as usize;
        let offset = self.pos;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| FormatError::Utf8 { offset })
    }

    fn strings(&mut self, n: usize) -> Result<Vec<String>, FormatError> {
        // each string needs at least its length prefix
        self.ensure(n.saturating_mul(4))?;
        (0..n).map(|_| self.string()).collect()
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f32>, FormatError> {
        let bytes = self.take(n.checked_mul(4).ok_or(FormatError::Truncated {
            offset: self.pos,
            needed: usize::MAX,
        })?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    fn ensure(&self, n: usize) -> Result<(), FormatError> {
        let remaining = self.bytes.len() - self.pos;
        if n > remaining {
            Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - remaining,
            })
        } else {
            Ok(())
        }
    }
}

fn invalid(offset: usize, message: impl ToString) -> FormatError {
    FormatError::Invalid {
        offset,
        message: message.to_string(),
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<LinearModel, FormatError> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic = bytes.get(..MAGIC.len()).unwrap_or(bytes);
    if magic != MAGIC {
        return Err(FormatError::BadMagic {
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    c.pos = MAGIC.len();
    let version_at = c.pos;
    let version = c.u32()?;
    if version != VERSION {
        return Err(FormatError::Version {
            version,
            offset: version_at,
        });
    }
    let mode_at = c.pos;
    let code = c.u8()?;
    let mode = LossMode::from_code(code).ok_or_else(|| invalid(mode_at, format!("unknown loss mode {code}")))?;
    let dim = c.u32()? as usize;
    let num_labels = c.u32()? as usize;
    let num_words = c.u32()? as usize;
    let num_ngrams = c.u32()? as usize;

    let labels_at = c.pos;
    let labels = c
        .strings(num_labels)?
        .into_iter()
        .map(LanguageTag::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid(labels_at, e))?;
    let vocab_at = c.pos;
    let words = c.strings(num_words)?;
    let ngrams = c.strings(num_ngrams)?;
    let vocab = Vocabulary::from_parts(words, ngrams, NgramRange::DEFAULT).map_err(|e| invalid(vocab_at, e))?;

    let rows = num_words + num_ngrams;
    let emb_at = c.pos;
    c.ensure(
        rows.saturating_mul(dim)
            .saturating_add(num_labels.saturating_mul(dim))
            .saturating_mul(4),
    )?;
    let embeddings = c.floats(rows * dim)?;
    let output = c.floats(num_labels * dim)?;
    if c.pos != bytes.len() {
        return Err(FormatError::Trailing {
            offset: c.pos,
            extra: bytes.len() - c.pos,
        });
    }
    LinearModel::from_parts(vocab, dim, embeddings, output, labels, mode).map_err(|e| invalid(emb_at, e))
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("model dimensions fit in u32");
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_model(model: &LinearModel) -> Vec<u8> {
    let vocab = model.vocab();
    let floats = model.embeddings().len() + model.output().len();
    let mut out = Vec::with_capacity(64 + floats * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(model.mode().code());
    put_u32(&mut out, model.dim());
    put_u32(&mut out, model.labels().len());
    put_u32(&mut out, vocab.num_words());
    put_u32(&mut out, vocab.num_ngrams());
    for l in model.labels() {
        put_str(&mut out, l.as_str());
    }
    for (_, _, entry) in vocab.iter() {
        put_str(&mut out, entry);
    }
    for x in model.embeddings().iter().chain(model.output()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn save_model(model: &LinearModel, path: &Path) -> io::Result<()> {
    fs::write(path, encode_model(model))
}

pub fn load_model(path: &Path) -> Result<LinearModel, LoadError> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| LoadError::Io {
        path: display.clone(),
        source,
    })?;
    decode_model(&bytes).map_err(|source| LoadError::Format { path: display, source })
}

/// `entry<TAB>index<TAB>kind` per vocabulary entry, in index order.
pub fn write_vocabulary(vocab: &Vocabulary, mut out: impl Write) -> io::Result<()> {
    for (idx, kind, entry) in vocab.iter() {
        writeln!(out, "{entry}\t{idx}\t{kind}")?;
    }
    Ok(())
}
