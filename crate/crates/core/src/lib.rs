//! Sentence-level multi-label language identification.
//!
//! A linear bag-of-n-grams classifier trained with either softmax
//! cross-entropy or per-language sigmoid losses, decoders that turn its
//! scores into label sets, a rank-profile trigram baseline, and
//! multi-label evaluation metrics.

#![no_std]

extern crate alloc;

pub mod datasets;
pub mod decode;
pub mod langcodes;
pub mod metrics;
pub mod model;
pub mod synthetic;
pub mod tag;
pub mod textprep;
pub mod trigram;

pub use datasets::Example;
pub use decode::DecodeStrategy;
pub use langcodes::LabelUniverse;
pub use model::{LinearModel, LossMode, ScoreVector};
pub use tag::{LabelSet, LanguageTag};
