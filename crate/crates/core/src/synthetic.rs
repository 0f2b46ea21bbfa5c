//! Seeded synthetic corpora over disjoint alphabets, for smoke tests and
//! benchmarks.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datasets::Example;
use crate::model::{LinearModel, LossMode};
use crate::tag::{LabelSet, LanguageTag};
use crate::textprep::{NgramRange, VocabularyBuilder};

/// A made-up language: a tag and the letters its words use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticLanguage {
    pub tag: LanguageTag,
    pub alphabet: Vec<char>,
}

const ALPHABETS: &[(&str, char, char)] = &[
    ("aaa_Latn", 'a', 'm'),
    ("bbb_Latn", 'n', 'z'),
    ("ccc_Cyrl", '\u{0430}', '\u{044F}'),
    ("ddd_Grek", '\u{03B1}', '\u{03C9}'),
    ("eee_Armn", '\u{0561}', '\u{0586}'),
    ("fff_Geor", '\u{10D0}', '\u{10F0}'),
    ("ggg_Hebr", '\u{05D0}', '\u{05EA}'),
    ("hhh_Thai", '\u{0E01}', '\u{0E2E}'),
    ("iii_Ethi", '\u{1200}', '\u{1248}'),
    ("jjj_Hira", '\u{3041}', '\u{3093}'),
    ("kkk_Kana", '\u{30A1}', '\u{30F3}'),
    ("lll_Cher", '\u{13A0}', '\u{13F4}'),
];

/// The largest `n` accepted by [`disjoint_languages`].
pub const MAX_LANGUAGES: usize = ALPHABETS.len();

/// `n` languages whose alphabets share no character.
///
/// # Panics
/// If `n > MAX_LANGUAGES`.
pub fn disjoint_languages(n: usize) -> Vec<SyntheticLanguage> {
    assert!(n <= MAX_LANGUAGES, "at most {MAX_LANGUAGES} synthetic languages");
    ALPHABETS[..n]
        .iter()
        .map(|&(tag, lo, hi)| SyntheticLanguage {
            tag: LanguageTag::new(tag).expect("valid tag"),
            alphabet: (lo..=hi).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub languages: usize,
    pub train_per_language: usize,
    pub test_per_language: usize,
    pub lexicon_size: usize,
    /// Inclusive range of words per sentence.
    pub sentence_words: (usize, usize),
    /// Inclusive range of letters per word.
    pub word_chars: (usize, usize),
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            languages: 5,
            train_per_language: 1000,
            test_per_language: 200,
            lexicon_size: 300,
            sentence_words: (4, 12),
            word_chars: (2, 8),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub languages: Vec<SyntheticLanguage>,
    pub lexicons: Vec<Vec<String>>,
    /// Grouped by language, in language order.
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

fn lexicon(rng: &mut ChaCha8Rng, alphabet: &[char], size: usize, chars: (usize, usize)) -> Vec<String> {
    let len = Uniform::new_inclusive(chars.0, chars.1);
    let mut seen = BTreeSet::new();
    let mut words = Vec::with_capacity(size);
    let mut attempts = 0usize;
    while words.len() < size && attempts < size * 100 {
        attempts += 1;
        let n = len.sample(rng);
        let w: String = (0..n)
            .map(|_| *alphabet.choose(rng).expect("non-empty alphabet"))
            .collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn sentence(rng: &mut ChaCha8Rng, lexicon: &[String], words: (usize, usize)) -> String {
    let n = rng.gen_range(words.0..=words.1);
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(lexicon.choose(rng).expect("non-empty lexicon"));
    }
    s
}

/// A monolingual corpus: train and test sentences drawn from one lexicon
/// per language.
pub fn generate(config: &CorpusConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let languages = disjoint_languages(config.languages);
    let lexicons: Vec<Vec<String>> = languages
        .iter()
        .map(|l| lexicon(&mut rng, &l.alphabet, config.lexicon_size, config.word_chars))
        .collect();
    let mut draw = |count: usize| -> Vec<Example> {
        let mut out = Vec::with_capacity(count * languages.len());
        for (lang, lex) in languages.iter().zip(&lexicons) {
            for _ in 0..count {
                let gold: LabelSet = core::iter::once(lang.tag.clone()).collect();
                let text = sentence(&mut rng, lex, config.sentence_words);
                out.push(Example::new(text, gold).expect("non-empty gold"));
            }
        }
        out
    };
    let train = draw(config.train_per_language);
    let test = draw(config.test_per_language);
    SyntheticCorpus {
        languages,
        lexicons,
        train,
        test,
    }
}

/// `count` two-language sentences, each the concatenation of two
/// monolingual examples with different gold labels.
///
/// Returns fewer when `examples` has fewer than two distinct labels.
pub fn code_switched_pairs(examples: &[Example], count: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let distinct: BTreeSet<&LabelSet> = examples.iter().map(Example::gold).collect();
    if distinct.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = examples.choose(&mut rng).expect("non-empty");
        let b = examples.choose(&mut rng).expect("non-empty");
        if a.gold() == b.gold() {
            continue;
        }
        let text = format!("{} {}", a.text(), b.text());
        let gold: LabelSet = a.gold().iter().chain(b.gold().iter()).cloned().collect();
        out.push(Example::new(text, gold).expect("non-empty gold"));
    }
    out
}

/// Lines of exactly `chars` characters built from lexicon words, cycling
/// through the lexicons in order.
pub fn fixed_length_lines(lexicons: &[Vec<String>], count: usize, chars: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let lex = &lexicons[i % lexicons.len()];
            let mut line = String::new();
            let mut n = 0;
            while n < chars {
                if n > 0 {
                    line.push(' ');
                    n += 1;
                }
                let w = lex.choose(&mut rng).expect("non-empty lexicon");
                for c in w.chars() {
                    if n == chars {
                        break;
                    }
                    line.push(c);
                    n += 1;
                }
            }
            // a trailing space would be trimmed away by cleaning
            if line.ends_with(' ') {
                line.pop();
                line.push(lex[0].chars().next().unwrap_or('x'));
            }
            line
        })
        .collect()
}

/// An untrained model over the lexicons' words and n-grams with
/// `num_labels` labels and random weights, for throughput measurement.
pub fn random_model(lexicons: &[Vec<String>], num_labels: usize, dim: usize, mode: LossMode, seed: u64) -> LinearModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = VocabularyBuilder::new();
    for lex in lexicons {
        builder.add(lex);
        builder.add(lex);
    }
    let vocab = builder.build(1, NgramRange::DEFAULT).expect("non-empty lexicons");
    let scale = 1.0 / dim as f32;
    let init = Uniform::new_inclusive(-scale, scale);
    let embeddings: Vec<f32> = (0..vocab.len() * dim).map(|_| init.sample(&mut rng)).collect();
    let out = Uniform::new_inclusive(-0.1f32, 0.1);
    let output: Vec<f32> = (0..num_labels * dim).map(|_| out.sample(&mut rng)).collect();
    let labels: Vec<LanguageTag> = (0..num_labels)
        .map(|i| LanguageTag::new(format!("x{i:03}_Zzzz")).expect("valid tag"))
        .collect();
    LinearModel::from_parts(vocab, dim, embeddings, output, labels, mode).expect("consistent shapes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabets_are_disjoint() {
        let langs = disjoint_languages(MAX_LANGUAGES);
        let mut seen = BTreeSet::new();
        for l in &langs {
            for c in &l.alphabet {
                assert!(seen.insert(*c), "{c} shared");
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = CorpusConfig {
            train_per_language: 20,
            test_per_language: 5,
            ..CorpusConfig::default()
        };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        assert_eq!(a.train.len(), 100);
        assert_eq!(a.test.len(), 25);
        let b = generate(&CorpusConfig { seed: 1, ..cfg });
        assert_ne!(a.train, b.train);
    }

    #[test]
    fn pairs_are_code_switched() {
        let c = generate(&CorpusConfig {
            train_per_language: 1,
            test_per_language: 10,
            ..CorpusConfig::default()
        });
        let pairs = code_switched_pairs(&c.test, 50, 3);
        assert_eq!(pairs.len(), 50);
        assert!(pairs.iter().all(Example::is_code_switched));
        assert!(code_switched_pairs(&c.test[..10], 5, 0).is_empty());
    }

    #[test]
    fn fixed_length() {
        let c = generate(&CorpusConfig {
            train_per_language: 1,
            test_per_language: 1,
            ..CorpusConfig::default()
        });
        for line in fixed_length_lines(&c.lexicons, 50, 100, 9) {
            assert_eq!(line.chars().count(), 100);
            assert_eq!(line.trim(), line);
        }
    }
}
