//! Classifies back-translated answers and extracts casualty counts.
//!
//! Classification precedence: (1) denial/unknown-event phrasing or a
//! different-incident description is Evasive; (2) a fatality-context number
//! (or an explicit zero-casualty phrase) is Numeric; (3) an exact-figures
//! disclaimer without numbers is NonExact; (4) anything else is Unparsed and
//! queued for manual override.
//!
//! Extraction associates each number with its nearest outcome cue (fatality
//! or injury), looking first inside the number's clause (clauses split at
//! and/but/while) and then across the sentence; ties prefer the cue after
//! the number. A number immediately quantifying a victim noun
//! ("5 civilians", "2 children") also sets that victim count; victim counts
//! mean killed victims, so a victim-tagged number with an injury outcome
//! contributes to the injured total instead. Victim-tagged numbers claim the
//! fatality slot (summed, since they enumerate disjoint groups) only when no
//! plain number does. Two distinct plain fatality totals are an extraction
//! conflict and demote the answer to Unparsed, as are conflicting injured
//! totals in an otherwise numeric answer.

pub mod lexicon;
pub mod numbers;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageCode;
use crate::stats::{CasualtyCounts, TrialOutcome};
use crate::Real;

pub use lexicon::{CodingLexicons, LexiconError, PhraseList};
use numbers::{sentence_items, Item};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Numeric,
    Evasive,
    NonExact,
    Unparsed,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Numeric => "numeric",
            Self::Evasive => "evasive",
            Self::NonExact => "non_exact",
            Self::Unparsed => "unparsed",
        };
        f.write_str(s)
    }
}

impl Classification {
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_lowercase().replace('-', "_").as_str() {
            "numeric" => Some(Self::Numeric),
            "evasive" => Some(Self::Evasive),
            "non_exact" | "nonexact" => Some(Self::NonExact),
            "unparsed" => Some(Self::Unparsed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Auto,
    ManualOverride,
}

/// Identity of one trial within a run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialKey {
    pub event_id: String,
    pub language: LanguageCode,
    pub repeat_index: u32,
}

/// The coded result for one trial. Non-Numeric classifications never carry
/// counts; Numeric always carries a fatality total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodedAnswer {
    pub trial: TrialKey,
    pub classification: Classification,
    pub fatalities_total: Option<Real>,
    pub civilians: Option<Real>,
    pub injured: Option<Real>,
    pub children: Option<Real>,
    pub provenance: Provenance,
    pub note: String,
}

impl CodedAnswer {
    /// The invariant every constructor path maintains.
    pub fn counts_consistent(&self) -> bool {
        match self.classification {
            Classification::Numeric => self.fatalities_total.is_some(),
            _ => {
                self.fatalities_total.is_none()
                    && self.civilians.is_none()
                    && self.injured.is_none()
                    && self.children.is_none()
            }
        }
    }
}

impl From<&CodedAnswer> for TrialOutcome<Real> {
    fn from(coded: &CodedAnswer) -> Self {
        match coded.classification {
            Classification::Numeric => TrialOutcome::Numeric(CasualtyCounts {
                fatalities: coded.fatalities_total.expect("numeric carries fatalities"),
                civilians: coded.civilians,
                injured: coded.injured,
                children: coded.children,
            }),
            Classification::Evasive => TrialOutcome::Evasive,
            Classification::NonExact | Classification::Unparsed => TrialOutcome::ExcludedOther,
        }
    }
}

/// Counts extracted from a Numeric answer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counts {
    pub fatalities_total: Option<Real>,
    pub civilians: Option<Real>,
    pub injured: Option<Real>,
    pub children: Option<Real>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExtractionError {
    #[error("conflicting {quantity} totals: {values:?}")]
    Conflict {
        quantity: &'static str,
        values: Vec<Real>,
    },
}

#[derive(Debug, Error)]
pub enum CodingError {
    #[error("cannot read override file '{path}': {message}")]
    Read { path: String, message: String },
    #[error("override row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("override row {row}: no trial ({event_id}, {language}, {repeat_index}) exists")]
    UnknownTrial {
        row: u64,
        event_id: String,
        language: LanguageCode,
        repeat_index: u32,
    },
    #[error("override row {row}: duplicate override for ({event_id}, {language}, {repeat_index})")]
    DuplicateOverride {
        row: u64,
        event_id: String,
        language: LanguageCode,
        repeat_index: u32,
    },
}

/// Classifies one back-translated answer. Total function; precedence as in
/// the module docs.
pub fn classify(text: &str, lexicons: &CodingLexicons) -> Classification {
    let sentences = sentence_items(text);
    if lexicons.denial.matches_any(&sentences) || lexicons.other_event.matches_any(&sentences) {
        return Classification::Evasive;
    }
    match scan_counts(&sentences, lexicons) {
        // Numbers in fatality context, even conflicting ones, are numeric at
        // this stage; conflicts demote later.
        Ok(counts) if counts.fatalities_total.is_some() => Classification::Numeric,
        Err(_) => Classification::Numeric,
        Ok(_) => {
            if lexicons.nonexact.matches_any(&sentences) {
                Classification::NonExact
            } else {
                Classification::Unparsed
            }
        }
    }
}

/// Extracts counts from an answer already classified Numeric.
pub fn extract_counts(text: &str, lexicons: &CodingLexicons) -> Result<Counts, ExtractionError> {
    scan_counts(&sentence_items(text), lexicons)
}

/// Classify-then-extract with conflict demotion; the composition the
/// pipeline and reports use.
pub fn auto_code(trial: TrialKey, text: &str, lexicons: &CodingLexicons) -> CodedAnswer {
    let sentences = sentence_items(text);
    let empty = |classification: Classification, note: String| CodedAnswer {
        trial: trial.clone(),
        classification,
        fatalities_total: None,
        civilians: None,
        injured: None,
        children: None,
        provenance: Provenance::Auto,
        note,
    };
    if let Some(phrase) = lexicons
        .denial
        .first_match(&sentences)
        .or_else(|| lexicons.other_event.first_match(&sentences))
    {
        return empty(Classification::Evasive, format!("matched \"{phrase}\""));
    }
    match scan_counts(&sentences, lexicons) {
        Ok(counts) if counts.fatalities_total.is_some() => CodedAnswer {
            trial,
            classification: Classification::Numeric,
            fatalities_total: counts.fatalities_total,
            civilians: counts.civilians,
            injured: counts.injured,
            children: counts.children,
            provenance: Provenance::Auto,
            note: String::new(),
        },
        Err(conflict) => empty(Classification::Unparsed, conflict.to_string()),
        Ok(_) => match lexicons.nonexact.first_match(&sentences) {
            Some(phrase) => empty(Classification::NonExact, format!("matched \"{phrase}\"")),
            None => empty(Classification::Unparsed, String::new()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Fatal,
    Injured,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VictimKind {
    Civilian,
    Child,
}

fn scan_counts(
    sentences: &[Vec<Item>],
    lexicons: &CodingLexicons,
) -> Result<Counts, ExtractionError> {
    let mut plain_fatal: Vec<Real> = Vec::new();
    let mut plain_injured: Vec<Real> = Vec::new();
    let mut victim_fatal_sum: Option<Real> = None;
    let mut victim_injured_sum: Option<Real> = None;
    let mut civilians: Option<Real> = None;
    let mut children: Option<Real> = None;
    let mut saw_zero_phrase = false;

    for sentence in sentences {
        let zero_spans = lexicons.zero.match_spans(sentence);
        if !zero_spans.is_empty() {
            saw_zero_phrase = true;
        }
        let masked = |position: usize| {
            zero_spans
                .iter()
                .any(|&(start, len)| position >= start && position < start + len)
        };
        // Clause boundaries at coordinating conjunctions keep "killed 3 and
        // wounded 5" from cross-assigning; range "and"s were consumed during
        // tokenization.
        let clause_of: Vec<usize> = {
            let mut ids = Vec::with_capacity(sentence.len());
            let mut clause = 0;
            for item in sentence {
                if matches!(item.as_word(), Some("and" | "but" | "while")) {
                    clause += 1;
                }
                ids.push(clause);
            }
            ids
        };
        let outcome_cues: Vec<(usize, Outcome)> = lexicons
            .fatality_cues
            .match_spans(sentence)
            .into_iter()
            .map(|(start, _)| (start, Outcome::Fatal))
            .chain(
                lexicons
                    .injured_cues
                    .match_spans(sentence)
                    .into_iter()
                    .map(|(start, _)| (start, Outcome::Injured)),
            )
            .filter(|&(start, _)| !masked(start))
            .collect();
        let victim_cues: Vec<(usize, VictimKind)> = lexicons
            .civilian_cues
            .match_spans(sentence)
            .into_iter()
            .map(|(start, _)| (start, VictimKind::Civilian))
            .chain(
                lexicons
                    .children_cues
                    .match_spans(sentence)
                    .into_iter()
                    .map(|(start, _)| (start, VictimKind::Child)),
            )
            .collect();

        for (position, item) in sentence.iter().enumerate() {
            let value = match item {
                Item::Number(n) => *n,
                Item::Word(_) => continue,
            };
            if value < 0.0 {
                continue;
            }
            // Victim tag: a victim cue starting within two tokens after the
            // number ("5 civilians", "five innocent civilians").
            let victim = victim_cues
                .iter()
                .find(|&&(start, _)| {
                    start > position
                        && start <= position + 2
                        && clause_of[start] == clause_of[position]
                })
                .map(|&(_, kind)| kind);
            // Outcome: nearest cue within the number's clause, falling back
            // to the nearest in the whole sentence; ties prefer the cue
            // after the number.
            let nearest = |cues: &[(usize, Outcome)], same_clause: bool| {
                cues.iter()
                    .filter(|&&(start, _)| !same_clause || clause_of[start] == clause_of[position])
                    .map(|&(start, outcome)| {
                        let distance = position.abs_diff(start);
                        let before = usize::from(start < position);
                        ((distance, before, start), outcome)
                    })
                    .min_by_key(|(rank, _)| *rank)
                    .map(|(_, outcome)| outcome)
            };
            let outcome = nearest(&outcome_cues, true).or_else(|| nearest(&outcome_cues, false));

            match (victim, outcome) {
                (Some(_), Some(Outcome::Injured)) => add(&mut victim_injured_sum, value),
                (Some(kind), outcome) => {
                    match kind {
                        VictimKind::Civilian => add(&mut civilians, value),
                        VictimKind::Child => add(&mut children, value),
                    }
                    if outcome == Some(Outcome::Fatal) {
                        add(&mut victim_fatal_sum, value);
                    }
                }
                (None, Some(Outcome::Fatal)) => plain_fatal.push(value),
                (None, Some(Outcome::Injured)) => plain_injured.push(value),
                (None, None) => {}
            }
        }
    }

    let fatalities_total = resolve_total(
        "fatality",
        &plain_fatal,
        victim_fatal_sum,
        saw_zero_phrase.then_some(0.0),
    )?;
    // An injured conflict only demotes an otherwise numeric answer; without
    // a fatality reading the answer was never numeric and lands Unparsed.
    let injured = match resolve_total("injured", &plain_injured, victim_injured_sum, None) {
        Ok(value) => value,
        Err(conflict) if fatalities_total.is_some() => return Err(conflict),
        Err(_) => None,
    };
    Ok(Counts {
        fatalities_total,
        civilians,
        injured,
        children,
    })
}

fn add(slot: &mut Option<Real>, value: Real) {
    *slot = Some(slot.unwrap_or(0.0) + value);
}

/// Plain totals win over victim-group sums, which win over an explicit zero
/// phrase. Distinct plain totals are a conflict.
fn resolve_total(
    quantity: &'static str,
    plain: &[Real],
    victim_sum: Option<Real>,
    zero: Option<Real>,
) -> Result<Option<Real>, ExtractionError> {
    if !plain.is_empty() {
        let mut distinct: Vec<Real> = Vec::new();
        for &value in plain {
            if !distinct.contains(&value) {
                distinct.push(value);
            }
        }
        if distinct.len() > 1 {
            distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite counts"));
            return Err(ExtractionError::Conflict {
                quantity,
                values: distinct,
            });
        }
        return Ok(Some(distinct[0]));
    }
    Ok(victim_sum.or(zero))
}

/// One row of the override CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct OverrideRow {
    pub trial: TrialKey,
    pub classification: Classification,
    pub counts: Counts,
    pub note: String,
    row: u64,
}

/// Reads the override CSV: columns event_id, language, repeat_index,
/// classification, fatalities_total, civilians, injured, children, note.
pub fn load_overrides(path: &Path) -> Result<Vec<OverrideRow>, CodingError> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| CodingError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| CodingError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| -> Result<usize, CodingError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CodingError::Read {
                path: path.display().to_string(),
                message: format!("missing column '{name}'"),
            })
    };
    let idx_event = column("event_id")?;
    let idx_language = column("language")?;
    let idx_repeat = column("repeat_index")?;
    let idx_class = column("classification")?;
    let idx_fatalities = column("fatalities_total")?;
    let idx_civilians = column("civilians")?;
    let idx_injured = column("injured")?;
    let idx_children = column("children")?;
    let idx_note = column("note")?;

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| CodingError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| record.get(idx).unwrap_or("").trim().to_string();
        let parse_count = |idx: usize, name: &str| -> Result<Option<Real>, CodingError> {
            let raw = field(idx);
            if raw.is_empty() {
                return Ok(None);
            }
            let value: Real = raw.parse().map_err(|_| CodingError::Row {
                row,
                message: format!("unparsable {name} '{raw}'"),
            })?;
            if value < 0.0 {
                return Err(CodingError::Row {
                    row,
                    message: format!("{name} must be non-negative, got {value}"),
                });
            }
            Ok(Some(value))
        };

        let classification =
            Classification::parse(&field(idx_class)).ok_or_else(|| CodingError::Row {
                row,
                message: format!("unknown classification '{}'", field(idx_class)),
            })?;
        let repeat_index: u32 = field(idx_repeat).parse().map_err(|_| CodingError::Row {
            row,
            message: format!("unparsable repeat_index '{}'", field(idx_repeat)),
        })?;
        let counts = Counts {
            fatalities_total: parse_count(idx_fatalities, "fatalities_total")?,
            civilians: parse_count(idx_civilians, "civilians")?,
            injured: parse_count(idx_injured, "injured")?,
            children: parse_count(idx_children, "children")?,
        };
        if classification == Classification::Numeric && counts.fatalities_total.is_none() {
            return Err(CodingError::Row {
                row,
                message: "numeric override requires fatalities_total".into(),
            });
        }
        rows.push(OverrideRow {
            trial: TrialKey {
                event_id: field(idx_event),
                language: LanguageCode::new(field(idx_language)),
                repeat_index,
            },
            classification,
            counts,
            note: field(idx_note),
            row,
        });
    }
    Ok(rows)
}

/// Replaces referenced answers wholesale with manual-override provenance.
/// Counts are cleared for non-Numeric overrides, keeping the invariant.
pub fn apply_overrides(
    coded: &[CodedAnswer],
    overrides: &[OverrideRow],
) -> Result<Vec<CodedAnswer>, CodingError> {
    let mut by_trial: BTreeMap<TrialKey, &OverrideRow> = BTreeMap::new();
    let mut seen: HashSet<TrialKey> = HashSet::new();
    for row in overrides {
        if !seen.insert(row.trial.clone()) {
            return Err(CodingError::DuplicateOverride {
                row: row.row,
                event_id: row.trial.event_id.clone(),
                language: row.trial.language.clone(),
                repeat_index: row.trial.repeat_index,
            });
        }
        by_trial.insert(row.trial.clone(), row);
    }
    let known: HashSet<&TrialKey> = coded.iter().map(|c| &c.trial).collect();
    for row in overrides {
        if !known.contains(&row.trial) {
            return Err(CodingError::UnknownTrial {
                row: row.row,
                event_id: row.trial.event_id.clone(),
                language: row.trial.language.clone(),
                repeat_index: row.trial.repeat_index,
            });
        }
    }
    Ok(coded
        .iter()
        .map(|answer| match by_trial.get(&answer.trial) {
            Some(row) => {
                let numeric = row.classification == Classification::Numeric;
                CodedAnswer {
                    trial: answer.trial.clone(),
                    classification: row.classification,
                    fatalities_total: numeric.then_some(row.counts.fatalities_total).flatten(),
                    civilians: numeric.then_some(row.counts.civilians).flatten(),
                    injured: numeric.then_some(row.counts.injured).flatten(),
                    children: numeric.then_some(row.counts.children).flatten(),
                    provenance: Provenance::ManualOverride,
                    note: row.note.clone(),
                }
            }
            None => answer.clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn lexicons() -> CodingLexicons {
        CodingLexicons::default()
    }

    fn key(repeat: u32) -> TrialKey {
        TrialKey {
            event_id: "E1".into(),
            language: LanguageCode::new("he"),
            repeat_index: repeat,
        }
    }

    #[test]
    fn classify_precedence_examples() {
        let lex = lexicons();
        assert_eq!(
            classify(
                "I am not aware of any Israeli airstrike on that date in Nuseirat.",
                &lex
            ),
            Classification::Evasive
        );
        assert_eq!(
            classify(
                "I do not know the exact number of fatalities in this strike.",
                &lex
            ),
            Classification::NonExact
        );
        assert_eq!(
            classify(
                "On that day the PKK abducted and executed 13 Turkish citizens in a cave.",
                &lex
            ),
            Classification::Evasive
        );
        assert_eq!(
            classify("Three people were killed and five injured.", &lex),
            Classification::Numeric
        );
        assert_eq!(
            classify("The weather was calm that day.", &lex),
            Classification::Unparsed
        );
    }

    #[test]
    fn extract_spec_examples() {
        let lex = lexicons();
        let counts = extract_counts("Three people were killed and five injured.", &lex).unwrap();
        assert_eq!(counts.fatalities_total, Some(3.0));
        assert_eq!(counts.injured, Some(5.0));
        assert_eq!(counts.civilians, None);
        assert_eq!(counts.children, None);

        let counts = extract_counts("Between 10 and 12 people were killed.", &lex).unwrap();
        assert_eq!(counts.fatalities_total, Some(11.0));

        let counts = extract_counts("No casualties were reported.", &lex).unwrap();
        assert_eq!(counts.fatalities_total, Some(0.0));
        assert_eq!(counts.injured, None);
    }

    #[test]
    fn victim_groups_set_secondary_counts() {
        let lex = lexicons();
        let counts = extract_counts(
            "The airstrike killed 12 people, including 5 civilians and 2 children.",
            &lex,
        )
        .unwrap();
        assert_eq!(counts.fatalities_total, Some(12.0));
        assert_eq!(counts.civilians, Some(5.0));
        assert_eq!(counts.children, Some(2.0));
    }

    #[test]
    fn victim_only_fatalities_claim_the_total() {
        let lex = lexicons();
        let counts =
            extract_counts("Five civilians died and two soldiers were wounded.", &lex).unwrap();
        assert_eq!(counts.fatalities_total, Some(5.0));
        assert_eq!(counts.civilians, Some(5.0));
        assert_eq!(counts.injured, Some(2.0));
    }

    #[test]
    fn zero_phrase_with_injuries() {
        let lex = lexicons();
        let counts =
            extract_counts("No one was killed, but four people were wounded.", &lex).unwrap();
        assert_eq!(counts.fatalities_total, Some(0.0));
        assert_eq!(counts.injured, Some(4.0));
    }

    #[test]
    fn injured_conflict_without_fatality_context_is_unparsed() {
        let lex = lexicons();
        let text = "Sources said 3 were injured, others said 7 were injured.";
        assert_eq!(classify(text, &lex), Classification::Unparsed);
        let coded = auto_code(key(0), text, &lex);
        assert_eq!(coded.classification, Classification::Unparsed);
        assert!(coded.counts_consistent());
    }

    #[test]
    fn injured_conflict_with_fatality_context_demotes_with_a_note() {
        let lex = lexicons();
        let text = "The strike killed 4. Sources said 3 were injured, others said 7 injured.";
        let coded = auto_code(key(0), text, &lex);
        assert_eq!(coded.classification, Classification::Unparsed);
        assert!(coded.note.contains("injured"), "{}", coded.note);
    }

    #[test]
    fn conflicting_totals_demote_to_unparsed() {
        let lex = lexicons();
        let coded = auto_code(
            key(0),
            "Reports said 5 people were killed, while officials stated 9 people were killed.",
            &lex,
        );
        assert_eq!(coded.classification, Classification::Unparsed);
        assert!(coded.note.contains("conflicting"), "{}", coded.note);
        assert!(coded.counts_consistent());
    }

    #[test]
    fn injured_only_answers_are_unparsed() {
        let lex = lexicons();
        let coded = auto_code(key(0), "Five people were injured in the incident.", &lex);
        assert_eq!(coded.classification, Classification::Unparsed);
        assert!(coded.counts_consistent());
    }

    #[test]
    fn coding_is_deterministic() {
        let lex = lexicons();
        let text = "The strike killed 8 people. Among them were 3 children.";
        assert_eq!(auto_code(key(0), text, &lex), auto_code(key(0), text, &lex));
    }

    fn coded(repeat: u32) -> CodedAnswer {
        auto_code(key(repeat), "Three people were killed.", &lexicons())
    }

    fn write_overrides(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    const OVERRIDE_HEADER: &str =
        "event_id,language,repeat_index,classification,fatalities_total,civilians,injured,children,note\n";

    #[test]
    fn empty_override_file_is_identity() {
        let f = write_overrides(OVERRIDE_HEADER);
        let overrides = load_overrides(f.path()).unwrap();
        let input = vec![coded(0), coded(1)];
        let output = apply_overrides(&input, &overrides).unwrap();
        assert_eq!(input, output);
    }

    #[test]
    fn override_to_evasive_clears_counts() {
        let f = write_overrides(&format!(
            "{OVERRIDE_HEADER}E1,he,0,evasive,7,,,,reviewed by hand\n"
        ));
        let overrides = load_overrides(f.path()).unwrap();
        let output = apply_overrides(&[coded(0)], &overrides).unwrap();
        assert_eq!(output[0].classification, Classification::Evasive);
        assert_eq!(output[0].fatalities_total, None);
        assert_eq!(output[0].provenance, Provenance::ManualOverride);
        assert_eq!(output[0].note, "reviewed by hand");
        assert!(output[0].counts_consistent());
    }

    #[test]
    fn duplicate_override_is_an_error() {
        let f = write_overrides(&format!(
            "{OVERRIDE_HEADER}E1,he,0,evasive,,,,,x\nE1,he,0,numeric,4,,,,y\n"
        ));
        let overrides = load_overrides(f.path()).unwrap();
        let err = apply_overrides(&[coded(0)], &overrides).unwrap_err();
        assert!(
            matches!(err, CodingError::DuplicateOverride { row: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn unknown_trial_is_an_error() {
        let f = write_overrides(&format!("{OVERRIDE_HEADER}E9,he,0,evasive,,,,,x\n"));
        let overrides = load_overrides(f.path()).unwrap();
        let err = apply_overrides(&[coded(0)], &overrides).unwrap_err();
        assert!(matches!(err, CodingError::UnknownTrial { .. }), "{err}");
    }

    #[test]
    fn numeric_override_requires_fatalities() {
        let f = write_overrides(&format!("{OVERRIDE_HEADER}E1,he,0,numeric,,,,,x\n"));
        let err = load_overrides(f.path()).unwrap_err();
        assert!(matches!(err, CodingError::Row { .. }), "{err}");
    }
}
