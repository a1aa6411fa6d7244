//! Word-frequency and keyword-lexicon analysis of back-translated answers.
//!
//! Frequencies are computed over pivot-language text per source language.
//! Counts carry shot-noise uncertainties (the square root of the count).
//! The stopword list and the keyword lexicon ship as versioned data files;
//! the stemmer rules are pinned in [`stemmer`].

pub mod stemmer;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageCode;
use crate::scalar::Scalar;

pub use stemmer::stem;

/// Default stopword list shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
/// Default keyword lexicon shipped with the crate.
pub const DEFAULT_KEYWORD_LEXICON: &str = include_str!("../../data/keywords.json");

#[derive(Debug, Error)]
pub enum TextStatsError {
    #[error("cannot read '{path}': {message}")]
    Read { path: String, message: String },
    #[error("cannot parse lexicon '{path}': {message}")]
    Parse { path: String, message: String },
    #[error("keyword lexicon has no categories")]
    EmptyLexicon,
}

/// One stopword per line; `#` starts a comment.
#[derive(Debug, Clone)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn from_text(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        Self { words }
    }

    pub fn from_path(path: &Path) -> Result<Self, TextStatsError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextStatsError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self::from_text(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::from_text(DEFAULT_STOPWORDS)
    }
}

/// Lowercases and splits on non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Tokenizes the corpus, drops stopwords, and stems what remains, preserving
/// token order.
pub fn tokenize_and_stem<'a, I>(corpus: I, stopwords: &StopwordList) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    corpus
        .into_iter()
        .flat_map(tokenize)
        .filter(|token| !stopwords.contains(token))
        .map(|token| stem(&token))
        .collect()
}

/// One row of a frequency table.
#[derive(Debug, Clone, PartialEq)]
pub struct StemCount<F> {
    pub stem: String,
    pub count: u64,
    /// Shot-noise uncertainty: sqrt(count).
    pub uncertainty: F,
}

/// Top stems of one language's corpus, sorted by count descending with ties
/// broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct WordFrequencyTable<F> {
    pub language: LanguageCode,
    pub entries: Vec<StemCount<F>>,
    /// Tokens counted after stopword removal.
    pub corpus_token_count: u64,
}

/// Counts stems over the corpus and keeps the `k` most frequent.
pub fn top_stems<'a, F, I>(
    language: &LanguageCode,
    corpus: I,
    k: usize,
    stopwords: &StopwordList,
) -> WordFrequencyTable<F>
where
    F: Scalar,
    I: IntoIterator<Item = &'a str>,
{
    let stems = tokenize_and_stem(corpus, stopwords);
    let mut counts: HashMap<String, u64> = HashMap::new();
    for stem in &stems {
        *counts.entry(stem.clone()).or_insert(0) += 1;
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let entries = ranked
        .into_iter()
        .take(k)
        .map(|(stem, count)| StemCount {
            uncertainty: F::from_u64(count)
                .expect("count representable as scalar")
                .sqrt(),
            stem,
            count,
        })
        .collect();
    WordFrequencyTable {
        language: language.clone(),
        entries,
        corpus_token_count: stems.len() as u64,
    }
}

/// Keyword lexicon: category name to its surface forms and stems. Single-word
/// terms match by stem equality; multiword terms match as consecutive raw
/// tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordLexicon {
    pub name: String,
    pub categories: BTreeMap<String, Vec<String>>,
}

impl KeywordLexicon {
    pub fn from_json(raw: &str, origin: &str) -> Result<Self, TextStatsError> {
        let lexicon: Self = serde_json::from_str(raw).map_err(|e| TextStatsError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if lexicon.categories.is_empty() {
            return Err(TextStatsError::EmptyLexicon);
        }
        Ok(lexicon)
    }

    pub fn from_path(path: &Path) -> Result<Self, TextStatsError> {
        let raw = std::fs::read_to_string(path).map_err(|e| TextStatsError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&raw, &path.display().to_string())
    }
}

impl Default for KeywordLexicon {
    fn default() -> Self {
        Self::from_json(DEFAULT_KEYWORD_LEXICON, "builtin").expect("builtin lexicon is valid")
    }
}

/// Counts for one category in both corpora; ratio is target over attacker,
/// absent when the attacker count is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCount<F> {
    pub category: String,
    pub attacker_count: u64,
    pub target_count: u64,
    pub ratio: Option<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordReport<F> {
    pub lexicon_name: String,
    pub attacker_language: LanguageCode,
    pub target_language: LanguageCode,
    pub categories: Vec<CategoryCount<F>>,
}

/// Counts each lexicon category in both corpora and forms target/attacker
/// ratios. Matching ignores the stopword list so keyword counts do not depend
/// on it.
pub fn keyword_counts<'a, F, A, T>(
    lexicon: &KeywordLexicon,
    attacker: (&LanguageCode, A),
    target: (&LanguageCode, T),
) -> KeywordReport<F>
where
    F: Scalar,
    A: IntoIterator<Item = &'a str>,
    T: IntoIterator<Item = &'a str>,
{
    let attacker_tokens: Vec<String> = attacker.1.into_iter().flat_map(tokenize).collect();
    let target_tokens: Vec<String> = target.1.into_iter().flat_map(tokenize).collect();
    let categories = lexicon
        .categories
        .iter()
        .map(|(category, terms)| {
            let attacker_count = count_category(&attacker_tokens, terms);
            let target_count = count_category(&target_tokens, terms);
            let ratio = if attacker_count == 0 {
                None
            } else {
                Some(
                    F::from_u64(target_count).expect("count representable")
                        / F::from_u64(attacker_count).expect("count representable"),
                )
            };
            CategoryCount {
                category: category.clone(),
                attacker_count,
                target_count,
                ratio,
            }
        })
        .collect();
    KeywordReport {
        lexicon_name: lexicon.name.clone(),
        attacker_language: attacker.0.clone(),
        target_language: target.0.clone(),
        categories,
    }
}

fn count_category(tokens: &[String], terms: &[String]) -> u64 {
    let mut single_stems: HashSet<String> = HashSet::new();
    let mut phrases: Vec<Vec<String>> = Vec::new();
    for term in terms {
        let parts = tokenize(term);
        match parts.len() {
            0 => {}
            1 => {
                single_stems.insert(stem(&parts[0]));
            }
            _ => {
                if !phrases.contains(&parts) {
                    phrases.push(parts);
                }
            }
        }
    }

    let mut count = 0u64;
    for token in tokens {
        if single_stems.contains(&stem(token)) {
            count += 1;
        }
    }
    for phrase in &phrases {
        let mut i = 0;
        while i + phrase.len() <= tokens.len() {
            if tokens[i..i + phrase.len()] == phrase[..] {
                count += 1;
                i += phrase.len();
            } else {
                i += 1;
            }
        }
    }
    count
}
