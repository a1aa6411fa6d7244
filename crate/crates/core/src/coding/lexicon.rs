//! Phrase and cue lexicons for answer coding.
//!
//! Lexicons are data files (UTF-8 text, one phrase per line, `#` comments) so
//! auditors can extend them per domain; the shipped defaults cover common
//! phrasings. Matching is token-based after lowercasing and punctuation
//! splitting, so "no-one was killed" and "no one was killed" are the same
//! phrase.

use std::path::Path;

use thiserror::Error;

use super::numbers::Item;
use crate::textstats::tokenize;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon '{path}': {message}")]
    Read { path: String, message: String },
    #[error("lexicon '{path}' contains no phrases")]
    Empty { path: String },
}

/// A list of phrases, each stored as its token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseList {
    phrases: Vec<Vec<String>>,
}

impl PhraseList {
    pub fn from_text(text: &str) -> Self {
        let phrases = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(tokenize)
            .filter(|tokens| !tokens.is_empty())
            .collect();
        Self { phrases }
    }

    pub fn from_path(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let list = Self::from_text(&text);
        if list.phrases.is_empty() {
            return Err(LexiconError::Empty {
                path: path.display().to_string(),
            });
        }
        Ok(list)
    }

    /// Token spans (start, length) where any phrase matches the sentence.
    pub fn match_spans(&self, sentence: &[Item]) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        for phrase in &self.phrases {
            if phrase.len() > sentence.len() {
                continue;
            }
            for start in 0..=(sentence.len() - phrase.len()) {
                let matched = phrase.iter().enumerate().all(|(offset, word)| {
                    sentence[start + offset].as_word() == Some(word.as_str())
                });
                if matched {
                    spans.push((start, phrase.len()));
                }
            }
        }
        spans
    }

    /// The first phrase matching anywhere in the sentences, for notes.
    pub fn first_match(&self, sentences: &[Vec<Item>]) -> Option<String> {
        for sentence in sentences {
            for phrase in &self.phrases {
                if phrase.len() > sentence.len() {
                    continue;
                }
                for start in 0..=(sentence.len() - phrase.len()) {
                    let matched = phrase.iter().enumerate().all(|(offset, word)| {
                        sentence[start + offset].as_word() == Some(word.as_str())
                    });
                    if matched {
                        return Some(phrase.join(" "));
                    }
                }
            }
        }
        None
    }

    pub fn matches_any(&self, sentences: &[Vec<Item>]) -> bool {
        self.first_match(sentences).is_some()
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

/// The full rule table used by the coder.
#[derive(Debug, Clone)]
pub struct CodingLexicons {
    /// Evasive: the event is denied or unknown.
    pub denial: PhraseList,
    /// Evasive: the answer describes a different kind of incident.
    pub other_event: PhraseList,
    /// NonExact: ignorance of exact figures, vague quantities.
    pub nonexact: PhraseList,
    /// Numeric zero: explicit no-casualty phrasings.
    pub zero: PhraseList,
    /// Outcome cues: fatalities.
    pub fatality_cues: PhraseList,
    /// Outcome cues: injuries.
    pub injured_cues: PhraseList,
    /// Victim-type cues: civilians.
    pub civilian_cues: PhraseList,
    /// Victim-type cues: children.
    pub children_cues: PhraseList,
}

impl Default for CodingLexicons {
    fn default() -> Self {
        Self {
            denial: PhraseList::from_text(include_str!("../../data/denial_phrases.txt")),
            other_event: PhraseList::from_text(include_str!("../../data/other_event_cues.txt")),
            nonexact: PhraseList::from_text(include_str!("../../data/nonexact_phrases.txt")),
            zero: PhraseList::from_text(include_str!("../../data/zero_phrases.txt")),
            fatality_cues: PhraseList::from_text(include_str!("../../data/cues_fatalities.txt")),
            injured_cues: PhraseList::from_text(include_str!("../../data/cues_injured.txt")),
            civilian_cues: PhraseList::from_text(include_str!("../../data/cues_civilians.txt")),
            children_cues: PhraseList::from_text(include_str!("../../data/cues_children.txt")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::numbers::sentence_items;

    #[test]
    fn phrases_match_across_punctuation_variants() {
        let list = PhraseList::from_text("no one was killed\n# comment\n");
        assert!(list.matches_any(&sentence_items("No-one was killed.")));
        assert!(list.matches_any(&sentence_items("no one was killed")));
        assert!(!list.matches_any(&sentence_items("someone was killed")));
    }

    #[test]
    fn numbers_break_phrase_matches() {
        let list = PhraseList::from_text("no record of");
        assert!(!list.matches_any(&sentence_items("no 7 record of")));
    }

    #[test]
    fn default_lexicons_are_populated() {
        let lexicons = CodingLexicons::default();
        assert!(!lexicons.denial.is_empty());
        assert!(!lexicons.other_event.is_empty());
        assert!(!lexicons.nonexact.is_empty());
        assert!(!lexicons.zero.is_empty());
        assert!(!lexicons.fatality_cues.is_empty());
        assert!(!lexicons.injured_cues.is_empty());
        assert!(!lexicons.civilian_cues.is_empty());
        assert!(!lexicons.children_cues.is_empty());
    }
}
