//! Audit logfile: JSON Lines, one typed record per line.
//!
//! Record types are `run_meta`, `primer_translation`, `question_translation`,
//! `trial`, `failure`, and `run_summary`, each tagged by a `type` field.
//! `run_meta` opens the file and carries a `schema` version; a finalized
//! logfile ends with `run_summary` and is sorted canonically: translations
//! first (primers by language, questions by event date/id/language), then
//! trials and failures by (event_date, event_id, language, repeat_index).
//!
//! Every number a report prints is recomputable from this file plus an
//! override file; no external state is needed.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::RequestKey;
use crate::events::ConflictEvent;
use crate::lang::{LanguageCode, LanguageSlot};
use crate::prompts::{Primer, QuestionTemplate};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum LogfileError {
    #[error("cannot read logfile '{path}': {message}")]
    Read { path: String, message: String },
    #[error("cannot write logfile '{path}': {message}")]
    Write { path: String, message: String },
    #[error("line {line}: {message}")]
    Line { line: u64, message: String },
    #[error("logfile is empty")]
    Empty,
}

/// Event fields the logfile carries so reports need no external table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMeta {
    pub event_id: String,
    pub event_date: NaiveDate,
    pub attacker_label: String,
    pub location_name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub reference_fatalities: Option<u32>,
}

impl From<&ConflictEvent> for EventMeta {
    fn from(e: &ConflictEvent) -> Self {
        Self {
            event_id: e.event_id.clone(),
            event_date: e.event_date,
            attacker_label: e.attacker_label.clone(),
            location_name: e.location_name.clone(),
            latitude: e.latitude,
            longitude: e.longitude,
            reference_fatalities: e.reference_fatalities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema: String,
    pub dyad_name: String,
    pub model_id: String,
    pub seed: u64,
    pub repeats: u32,
    pub query_temperature: f64,
    pub max_tokens: u32,
    pub languages: Vec<LanguageSlot>,
    pub template: QuestionTemplate,
    pub primer: Primer,
    pub events: Vec<EventMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimerTranslation {
    pub language: LanguageCode,
    pub source_text: String,
    pub translated_text: String,
    /// Absent when the pivot short-circuit applied (no backend call).
    pub request: Option<RequestKey>,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTranslation {
    pub event_id: String,
    pub language: LanguageCode,
    pub source_text: String,
    pub translated_text: String,
    pub request: Option<RequestKey>,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub timestamp: Option<String>,
}

/// One question/answer exchange in one language (one of the repeats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub event_id: String,
    pub language: LanguageCode,
    pub repeat_index: u32,
    pub primer_translated: String,
    pub question_translated: String,
    pub answer_native: String,
    pub answer_backtranslated: String,
    pub request_refs: Vec<RequestKey>,
    pub query_prompt_tokens: u64,
    pub query_completion_tokens: u64,
    pub backtranslation_prompt_tokens: u64,
    pub backtranslation_completion_tokens: u64,
    pub query_timestamp: String,
    /// Absent when no back-translation call was made (pivot language or
    /// empty answer).
    pub backtranslation_timestamp: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    PrimerTranslation,
    QuestionTranslation,
    Query,
    BackTranslation,
}

impl fmt::Display for FailureStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::PrimerTranslation => "primer_translation",
            Self::QuestionTranslation => "question_translation",
            Self::Query => "query",
            Self::BackTranslation => "back_translation",
        };
        f.write_str(s)
    }
}

/// A trial that could not be completed; downstream coding treats it as
/// missing, never as evasive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub event_id: String,
    pub language: LanguageCode,
    pub repeat_index: u32,
    pub stage: FailureStage,
    pub error_class: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trials: u64,
    pub failures: u64,
    pub requests: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    RunMeta(RunMeta),
    PrimerTranslation(PrimerTranslation),
    QuestionTranslation(QuestionTranslation),
    Trial(TrialRecord),
    Failure(FailureRecord),
    RunSummary(RunSummary),
}

/// Reads every record; errors carry the 1-based line number.
pub fn read_records(path: &Path) -> Result<Vec<LogRecord>, LogfileError> {
    let raw = std::fs::read_to_string(path).map_err(|e| LogfileError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_records(&raw)
}

pub fn parse_records(raw: &str) -> Result<Vec<LogRecord>, LogfileError> {
    let mut records = Vec::new();
    for (index, line) in raw.lines().enumerate() {
        let line_no = index as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(line).map_err(|e| LogfileError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Serializes one record per line; the encoding is byte-stable.
pub fn write_records(records: &[LogRecord], path: &Path) -> Result<(), LogfileError> {
    let to_io = |message: String| LogfileError::Write {
        path: path.display().to_string(),
        message,
    };
    let tmp = path.with_extension("tmp");
    {
        let file = File::create(&tmp).map_err(|e| to_io(e.to_string()))?;
        let mut writer = BufWriter::new(file);
        for record in records {
            let line = serde_json::to_string(record).map_err(|e| to_io(e.to_string()))?;
            writeln!(writer, "{line}").map_err(|e| to_io(e.to_string()))?;
        }
        writer.flush().map_err(|e| to_io(e.to_string()))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| to_io(e.to_string()))?;
    Ok(())
}

/// Append-mode writer used while a run is in flight (crash-resumable).
pub struct LogAppender {
    writer: BufWriter<File>,
    path: String,
}

impl LogAppender {
    pub fn create(path: &Path) -> Result<Self, LogfileError> {
        let file = File::create(path).map_err(|e| LogfileError::Write {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self {
            writer: BufWriter::new(file),
            path: path.display().to_string(),
        })
    }

    pub fn open_append(path: &Path) -> Result<Self, LogfileError> {
        let file = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| LogfileError::Write {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Ok(Self {
            writer: BufWriter::new(file),
            path: path.display().to_string(),
        })
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), LogfileError> {
        let to_io = |message: String| LogfileError::Write {
            path: self.path.clone(),
            message,
        };
        let line = serde_json::to_string(record).map_err(|e| to_io(e.to_string()))?;
        writeln!(self.writer, "{line}").map_err(|e| to_io(e.to_string()))?;
        self.writer.flush().map_err(|e| to_io(e.to_string()))
    }
}

/// Canonical ordering, independent of execution scheduling. Event dates come
/// from the run_meta record in `records`; unknown events sort by id alone at
/// the epoch, which cannot occur in files the pipeline emits.
pub fn canonical_sort(records: &mut [LogRecord]) {
    let dates: HashMap<String, NaiveDate> = records
        .iter()
        .find_map(|r| match r {
            LogRecord::RunMeta(meta) => Some(
                meta.events
                    .iter()
                    .map(|e| (e.event_id.clone(), e.event_date))
                    .collect(),
            ),
            _ => None,
        })
        .unwrap_or_default();
    let date_of = |event_id: &str| {
        dates
            .get(event_id)
            .copied()
            .unwrap_or(NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date"))
    };
    records.sort_by_key(|a| sort_key(a, &date_of));
}

type SortKey = (u8, NaiveDate, String, String, u32);

fn sort_key(record: &LogRecord, date_of: &dyn Fn(&str) -> NaiveDate) -> SortKey {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
    match record {
        LogRecord::RunMeta(_) => (0, epoch, String::new(), String::new(), 0),
        LogRecord::PrimerTranslation(p) => (1, epoch, String::new(), p.language.to_string(), 0),
        LogRecord::QuestionTranslation(q) => (
            2,
            date_of(&q.event_id),
            q.event_id.clone(),
            q.language.to_string(),
            0,
        ),
        LogRecord::Trial(t) => (
            3,
            date_of(&t.event_id),
            t.event_id.clone(),
            t.language.to_string(),
            t.repeat_index,
        ),
        LogRecord::Failure(f) => (
            3,
            date_of(&f.event_id),
            f.event_id.clone(),
            f.language.to_string(),
            f.repeat_index,
        ),
        LogRecord::RunSummary(_) => (4, epoch, String::new(), String::new(), 0),
    }
}

/// Statistics `validate` reports on success.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub records: usize,
    pub trials: usize,
    pub failures: usize,
    pub primer_translations: usize,
    pub question_translations: usize,
}

/// Schema-checks a finalized logfile, rejecting the first offending line.
pub fn validate(path: &Path) -> Result<ValidationSummary, LogfileError> {
    let raw = std::fs::read_to_string(path).map_err(|e| LogfileError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    validate_str(&raw)
}

pub fn validate_str(raw: &str) -> Result<ValidationSummary, LogfileError> {
    let mut meta: Option<RunMeta> = None;
    let mut summary: Option<(u64, RunSummary)> = None;
    let mut counts = ValidationSummary {
        records: 0,
        trials: 0,
        failures: 0,
        primer_translations: 0,
        question_translations: 0,
    };
    let mut prompt_tokens: u64 = 0;
    let mut completion_tokens: u64 = 0;
    let mut requests: u64 = 0;
    let mut last_line = 0u64;

    for (index, line) in raw.lines().enumerate() {
        let line_no = index as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        last_line = line_no;
        let record: LogRecord = serde_json::from_str(line).map_err(|e| LogfileError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        counts.records += 1;
        if counts.records == 1 {
            match &record {
                LogRecord::RunMeta(m) if m.schema == SCHEMA_VERSION => {}
                LogRecord::RunMeta(m) => {
                    return Err(LogfileError::Line {
                        line: line_no,
                        message: format!(
                            "unsupported schema '{}' (expected '{SCHEMA_VERSION}')",
                            m.schema
                        ),
                    })
                }
                _ => {
                    return Err(LogfileError::Line {
                        line: line_no,
                        message: "first record must be run_meta".into(),
                    })
                }
            }
        }
        if let Some((summary_line, _)) = &summary {
            return Err(LogfileError::Line {
                line: *summary_line,
                message: "run_summary must be the last record".into(),
            });
        }
        let err = |message: String| LogfileError::Line {
            line: line_no,
            message,
        };
        match &record {
            LogRecord::RunMeta(m) => {
                if counts.records != 1 {
                    return Err(err("duplicate run_meta record".into()));
                }
                if m.repeats == 0 {
                    return Err(err("repeats must be at least 1".into()));
                }
                meta = Some(m.clone());
            }
            LogRecord::PrimerTranslation(p) => {
                counts.primer_translations += 1;
                check_language(meta.as_ref(), &p.language).map_err(err)?;
                check_request(&p.request, &p.timestamp).map_err(err)?;
                requests += u64::from(p.request.is_some());
                prompt_tokens += p.prompt_tokens.unwrap_or(0);
                completion_tokens += p.completion_tokens.unwrap_or(0);
            }
            LogRecord::QuestionTranslation(q) => {
                counts.question_translations += 1;
                check_language(meta.as_ref(), &q.language).map_err(err)?;
                check_event(meta.as_ref(), &q.event_id).map_err(err)?;
                check_request(&q.request, &q.timestamp).map_err(err)?;
                requests += u64::from(q.request.is_some());
                prompt_tokens += q.prompt_tokens.unwrap_or(0);
                completion_tokens += q.completion_tokens.unwrap_or(0);
            }
            LogRecord::Trial(t) => {
                counts.trials += 1;
                check_language(meta.as_ref(), &t.language).map_err(err)?;
                check_event(meta.as_ref(), &t.event_id).map_err(err)?;
                if let Some(m) = meta.as_ref() {
                    if t.repeat_index >= m.repeats {
                        return Err(err(format!(
                            "repeat_index {} outside 0..{}",
                            t.repeat_index, m.repeats
                        )));
                    }
                }
                if t.request_refs.is_empty() {
                    return Err(err("trial carries no request_refs".into()));
                }
                for key in &t.request_refs {
                    check_digest(&key.digest).map_err(err)?;
                }
                check_timestamp(&t.query_timestamp).map_err(err)?;
                if let Some(ts) = &t.backtranslation_timestamp {
                    check_timestamp(ts).map_err(err)?;
                }
                if !t.answer_native.is_empty() && t.answer_backtranslated.is_empty() {
                    return Err(err(
                        "answer_backtranslated empty for a non-empty native answer".into(),
                    ));
                }
                requests += t.request_refs.len() as u64;
                prompt_tokens += t.query_prompt_tokens + t.backtranslation_prompt_tokens;
                completion_tokens +=
                    t.query_completion_tokens + t.backtranslation_completion_tokens;
            }
            LogRecord::Failure(f) => {
                counts.failures += 1;
                check_language(meta.as_ref(), &f.language).map_err(err)?;
                check_event(meta.as_ref(), &f.event_id).map_err(err)?;
                if f.error_class.is_empty() {
                    return Err(err("failure record has an empty error_class".into()));
                }
            }
            LogRecord::RunSummary(s) => {
                summary = Some((line_no, s.clone()));
            }
        }
    }

    if counts.records == 0 {
        return Err(LogfileError::Empty);
    }
    let (summary_line, s) = summary.ok_or(LogfileError::Line {
        line: last_line,
        message: "missing run_summary record".into(),
    })?;
    let err = |message: String| LogfileError::Line {
        line: summary_line,
        message,
    };
    if s.trials != counts.trials as u64 {
        return Err(err(format!(
            "run_summary reports {} trials, file contains {}",
            s.trials, counts.trials
        )));
    }
    if s.failures != counts.failures as u64 {
        return Err(err(format!(
            "run_summary reports {} failures, file contains {}",
            s.failures, counts.failures
        )));
    }
    if s.requests != requests {
        return Err(err(format!(
            "run_summary reports {} requests, records imply {requests}",
            s.requests
        )));
    }
    if s.prompt_tokens != prompt_tokens || s.completion_tokens != completion_tokens {
        return Err(err(format!(
            "run_summary token totals ({}, {}) disagree with record sums ({prompt_tokens}, {completion_tokens})",
            s.prompt_tokens, s.completion_tokens
        )));
    }
    if let Some(m) = &meta {
        // Trial count = events x languages x repeats, minus recorded failures.
        let expected = m.events.len() * m.languages.len() * m.repeats as usize;
        if counts.trials + counts.failures != expected {
            return Err(err(format!(
                "{} trials and {} failures do not cover the {expected} planned cells",
                counts.trials, counts.failures
            )));
        }
    }
    Ok(counts)
}

fn check_language(meta: Option<&RunMeta>, language: &LanguageCode) -> Result<(), String> {
    match meta {
        Some(m) if !m.languages.iter().any(|slot| &slot.code == language) => {
            Err(format!("language '{language}' is not declared in run_meta"))
        }
        _ => Ok(()),
    }
}

fn check_event(meta: Option<&RunMeta>, event_id: &str) -> Result<(), String> {
    match meta {
        Some(m) if !m.events.iter().any(|e| e.event_id == event_id) => {
            Err(format!("event '{event_id}' is not declared in run_meta"))
        }
        _ => Ok(()),
    }
}

fn check_request(request: &Option<RequestKey>, timestamp: &Option<String>) -> Result<(), String> {
    if let Some(key) = request {
        check_digest(&key.digest)?;
        let ts = timestamp
            .as_ref()
            .ok_or_else(|| "record has a request but no timestamp".to_string())?;
        check_timestamp(ts)?;
    }
    Ok(())
}

fn check_digest(digest: &str) -> Result<(), String> {
    if digest.len() != 64 || !digest.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(format!("digest '{digest}' is not 64 hex characters"));
    }
    Ok(())
}

fn check_timestamp(ts: &str) -> Result<(), String> {
    crate::backend::parse_timestamp(ts).map(|_| ())
}
