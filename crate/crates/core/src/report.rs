//! Report assembly and emission.
//!
//! Every number in a report is recomputed from the logfile plus the override
//! file; regeneration is a pure function of those inputs with no clock or
//! environment dependence, so identical inputs produce byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coding::{
    apply_overrides, auto_code, load_overrides, Classification, CodedAnswer, CodingError,
    CodingLexicons, TrialKey,
};
use crate::lang::{LanguageCode, LanguageRole};
use crate::logfile::{LogRecord, RunMeta, RunSummary, TrialRecord};
use crate::stats::{
    aggregate, bias_with_evasives, dyad_bias, event_stats, EventCell, StatsError, TrialOutcome,
};
use crate::textstats::{keyword_counts, top_stems, KeywordLexicon, StopwordList};
use crate::Real;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("logfile is missing the {stage} stage: {detail}")]
    MissingStage { stage: &'static str, detail: String },
    #[error("coding stage incomplete: {count} unparsed trial(s) need manual overrides (emit the worklist with `code`, or pass --allow-unparsed)")]
    UnparsedPresent { count: usize },
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error("cannot write report file '{path}': {message}")]
    Write { path: String, message: String },
}

#[derive(Debug, Clone)]
pub struct ReportSettings {
    pub allow_unparsed: bool,
    pub top_stems_k: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            allow_unparsed: false,
            top_stems_k: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummaryRow {
    pub event_index: usize,
    pub event_id: String,
    pub event_date: String,
    pub location_name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub reference_fatalities: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStatsRow {
    pub event_id: String,
    pub language: LanguageCode,
    pub n_numeric: usize,
    pub n_evasive: usize,
    pub n_excluded_other: usize,
    pub mean_fatalities: Option<Real>,
    pub sdom_fatalities: Option<Real>,
    pub mean_civilians: Option<Real>,
    pub sdom_civilians: Option<Real>,
    pub mean_injured: Option<Real>,
    pub sdom_injured: Option<Real>,
    pub mean_children: Option<Real>,
    pub sdom_children: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub language: LanguageCode,
    pub avg_fatalities: Option<Real>,
    pub avg_injured: Option<Real>,
    pub avg_civilians: Option<Real>,
    pub total_evasive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCaseRow {
    pub event_id: String,
    pub bias_pct: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedCaseRow {
    pub event_id: String,
    pub reason: String,
}

/// Signed values; negative means the attacker-language estimate is lower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub per_case: Vec<BiasCaseRow>,
    pub mean_bias_pct: Option<Real>,
    pub mean_bias_magnitude_pct: Option<Real>,
    pub sd_cases_pct: Option<Real>,
    pub sdom_cases_pct: Option<Real>,
    pub excluded: Vec<ExcludedCaseRow>,
    pub mean_bias_with_evasives_pct: Option<Real>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFreqEntry {
    pub rank: usize,
    pub stem: String,
    pub count: u64,
    pub uncertainty: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFreqReport {
    pub language: LanguageCode,
    pub corpus_token_count: u64,
    pub entries: Vec<WordFreqEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordCategoryRow {
    pub category: String,
    pub attacker_count: u64,
    pub target_count: u64,
    /// target count over attacker count; absent when the denominator is 0.
    pub ratio: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordSection {
    pub lexicon_name: String,
    pub attacker_language: LanguageCode,
    pub target_language: LanguageCode,
    pub categories: Vec<KeywordCategoryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorklistRow {
    pub event_id: String,
    pub language: LanguageCode,
    pub repeat_index: u32,
    pub answer_backtranslated: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema: String,
    pub dyad_name: String,
    pub model_id: String,
    pub attacker_language: LanguageCode,
    pub target_language: LanguageCode,
    pub seed: u64,
    pub repeats: u32,
    pub query_temperature: f64,
    pub max_tokens: u32,
    pub trials: u64,
    pub failures: u64,
    pub requests: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub events: Vec<EventSummaryRow>,
    pub event_stats: Vec<EventStatsRow>,
    pub aggregates: Vec<AggregateRow>,
    pub bias: BiasReport,
    pub word_frequencies: Vec<WordFreqReport>,
    pub keywords: KeywordSection,
    pub unparsed_worklist: Vec<WorklistRow>,
}

fn run_meta(records: &[LogRecord]) -> Result<&RunMeta, ReportError> {
    records
        .iter()
        .find_map(|r| match r {
            LogRecord::RunMeta(m) => Some(m),
            _ => None,
        })
        .ok_or(ReportError::MissingStage {
            stage: "run",
            detail: "no run_meta record".into(),
        })
}

fn run_summary(records: &[LogRecord]) -> Result<&RunSummary, ReportError> {
    records
        .iter()
        .find_map(|r| match r {
            LogRecord::RunSummary(s) => Some(s),
            _ => None,
        })
        .ok_or(ReportError::MissingStage {
            stage: "run",
            detail: "no run_summary record (run incomplete; use `resume`)".into(),
        })
}

fn trials(records: &[LogRecord]) -> Vec<&TrialRecord> {
    records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Trial(t) => Some(t),
            _ => None,
        })
        .collect()
}

/// Auto-codes every trial and applies overrides.
pub fn code_logfile(
    records: &[LogRecord],
    lexicons: &CodingLexicons,
    overrides: Option<&Path>,
) -> Result<Vec<CodedAnswer>, ReportError> {
    let mut coded: Vec<CodedAnswer> = trials(records)
        .into_iter()
        .map(|t| {
            auto_code(
                TrialKey {
                    event_id: t.event_id.clone(),
                    language: t.language.clone(),
                    repeat_index: t.repeat_index,
                },
                &t.answer_backtranslated,
                lexicons,
            )
        })
        .collect();
    if let Some(path) = overrides {
        let rows = load_overrides(path)?;
        coded = apply_overrides(&coded, &rows)?;
    }
    Ok(coded)
}

/// The unparsed trials needing manual resolution, with their answer text.
pub fn worklist(records: &[LogRecord], coded: &[CodedAnswer]) -> Vec<WorklistRow> {
    let answers: BTreeMap<TrialKey, &str> = trials(records)
        .into_iter()
        .map(|t| {
            (
                TrialKey {
                    event_id: t.event_id.clone(),
                    language: t.language.clone(),
                    repeat_index: t.repeat_index,
                },
                t.answer_backtranslated.as_str(),
            )
        })
        .collect();
    coded
        .iter()
        .filter(|c| c.classification == Classification::Unparsed)
        .map(|c| WorklistRow {
            event_id: c.trial.event_id.clone(),
            language: c.trial.language.clone(),
            repeat_index: c.trial.repeat_index,
            answer_backtranslated: answers.get(&c.trial).unwrap_or(&"").to_string(),
            note: c.note.clone(),
        })
        .collect()
}

pub fn build_report(
    records: &[LogRecord],
    overrides: Option<&Path>,
    lexicons: &CodingLexicons,
    keyword_lexicon: &KeywordLexicon,
    stopwords: &StopwordList,
    settings: &ReportSettings,
) -> Result<AuditReport, ReportError> {
    let meta = run_meta(records)?;
    let summary = run_summary(records)?;
    let coded = code_logfile(records, lexicons, overrides)?;
    let unparsed_worklist = worklist(records, &coded);
    if !settings.allow_unparsed && !unparsed_worklist.is_empty() {
        return Err(ReportError::UnparsedPresent {
            count: unparsed_worklist.len(),
        });
    }

    let mut events = meta.events.clone();
    events.sort_by(|a, b| (a.event_date, &a.event_id).cmp(&(b.event_date, &b.event_id)));
    let mut languages: Vec<LanguageCode> = meta
        .languages
        .iter()
        .map(|slot| slot.code.clone())
        .collect();
    languages.sort();
    let attacker = meta
        .languages
        .iter()
        .find(|slot| slot.role == LanguageRole::AttackerLanguage)
        .map(|slot| slot.code.clone())
        .ok_or(ReportError::MissingStage {
            stage: "run",
            detail: "run_meta declares no attacker_language".into(),
        })?;
    let target = meta
        .languages
        .iter()
        .find(|slot| slot.role == LanguageRole::TargetLanguage)
        .map(|slot| slot.code.clone())
        .ok_or(ReportError::MissingStage {
            stage: "run",
            detail: "run_meta declares no target_language".into(),
        })?;

    // Outcomes per (event, language): coded trials plus failures as excluded.
    let mut cells: BTreeMap<(String, LanguageCode), Vec<TrialOutcome<Real>>> = BTreeMap::new();
    for event in &events {
        for language in &languages {
            cells.insert((event.event_id.clone(), language.clone()), Vec::new());
        }
    }
    for answer in &coded {
        if let Some(cell) =
            cells.get_mut(&(answer.trial.event_id.clone(), answer.trial.language.clone()))
        {
            cell.push(TrialOutcome::from(answer));
        }
    }
    for record in records {
        if let LogRecord::Failure(f) = record {
            if let Some(cell) = cells.get_mut(&(f.event_id.clone(), f.language.clone())) {
                cell.push(TrialOutcome::ExcludedOther);
            }
        }
    }

    let mut event_stats_rows = Vec::new();
    let mut stats_by_language: BTreeMap<LanguageCode, Vec<crate::EventLanguageStats>> =
        BTreeMap::new();
    let mut cells_by_language: BTreeMap<LanguageCode, Vec<EventCell<Real>>> = BTreeMap::new();
    for event in &events {
        for language in &languages {
            let outcomes = &cells[&(event.event_id.clone(), language.clone())];
            let stats = event_stats(&event.event_id, language, outcomes);
            event_stats_rows.push(EventStatsRow {
                event_id: stats.event_id.clone(),
                language: stats.language.clone(),
                n_numeric: stats.n_numeric,
                n_evasive: stats.n_evasive,
                n_excluded_other: stats.n_excluded_other,
                mean_fatalities: stats.mean_fatalities,
                sdom_fatalities: stats.sdom_fatalities,
                mean_civilians: stats.mean_civilians,
                sdom_civilians: stats.sdom_civilians,
                mean_injured: stats.mean_injured,
                sdom_injured: stats.sdom_injured,
                mean_children: stats.mean_children,
                sdom_children: stats.sdom_children,
            });
            stats_by_language
                .entry(language.clone())
                .or_default()
                .push(stats);
            cells_by_language
                .entry(language.clone())
                .or_default()
                .push(EventCell {
                    event_id: event.event_id.clone(),
                    outcomes: outcomes.clone(),
                });
        }
    }

    let aggregates = languages
        .iter()
        .map(|language| {
            let agg = aggregate(language, &stats_by_language[language]);
            AggregateRow {
                language: language.clone(),
                avg_fatalities: agg.avg_fatalities,
                avg_injured: agg.avg_injured,
                avg_civilians: agg.avg_civilians,
                total_evasive: agg.total_evasive,
            }
        })
        .collect();

    let bias = build_bias_section(
        &stats_by_language[&attacker],
        &stats_by_language[&target],
        &cells_by_language[&attacker],
        &cells_by_language[&target],
    );

    let corpus_of = |language: &LanguageCode| -> Vec<&str> {
        trials(records)
            .into_iter()
            .filter(|t| &t.language == language)
            .map(|t| t.answer_backtranslated.as_str())
            .collect()
    };
    let word_frequencies = languages
        .iter()
        .map(|language| {
            let table: crate::WordFrequencyTable = top_stems(
                language,
                corpus_of(language),
                settings.top_stems_k,
                stopwords,
            );
            WordFreqReport {
                language: language.clone(),
                corpus_token_count: table.corpus_token_count,
                entries: table
                    .entries
                    .into_iter()
                    .enumerate()
                    .map(|(i, e)| WordFreqEntry {
                        rank: i + 1,
                        stem: e.stem,
                        count: e.count,
                        uncertainty: e.uncertainty,
                    })
                    .collect(),
            }
        })
        .collect();

    let keyword_report: crate::KeywordReport = keyword_counts(
        keyword_lexicon,
        (&attacker, corpus_of(&attacker).into_iter()),
        (&target, corpus_of(&target).into_iter()),
    );
    let keywords = KeywordSection {
        lexicon_name: keyword_report.lexicon_name,
        attacker_language: keyword_report.attacker_language,
        target_language: keyword_report.target_language,
        categories: keyword_report
            .categories
            .into_iter()
            .map(|c| KeywordCategoryRow {
                category: c.category,
                attacker_count: c.attacker_count,
                target_count: c.target_count,
                ratio: c.ratio,
            })
            .collect(),
    };

    Ok(AuditReport {
        schema: meta.schema.clone(),
        dyad_name: meta.dyad_name.clone(),
        model_id: meta.model_id.clone(),
        attacker_language: attacker,
        target_language: target,
        seed: meta.seed,
        repeats: meta.repeats,
        query_temperature: meta.query_temperature,
        max_tokens: meta.max_tokens,
        trials: summary.trials,
        failures: summary.failures,
        requests: summary.requests,
        prompt_tokens: summary.prompt_tokens,
        completion_tokens: summary.completion_tokens,
        events: events
            .iter()
            .enumerate()
            .map(|(i, e)| EventSummaryRow {
                event_index: i + 1,
                event_id: e.event_id.clone(),
                event_date: e.event_date.to_string(),
                location_name: e.location_name.clone(),
                latitude: e.latitude,
                longitude: e.longitude,
                reference_fatalities: e.reference_fatalities,
            })
            .collect(),
        event_stats: event_stats_rows,
        aggregates,
        bias,
        word_frequencies,
        keywords,
        unparsed_worklist,
    })
}

fn build_bias_section(
    attacker_stats: &[crate::EventLanguageStats],
    target_stats: &[crate::EventLanguageStats],
    attacker_cells: &[EventCell<Real>],
    target_cells: &[EventCell<Real>],
) -> BiasReport {
    let with_evasives = bias_with_evasives(attacker_cells, target_cells).ok();
    match dyad_bias(attacker_stats, target_stats) {
        Ok(summary) => BiasReport {
            per_case: summary
                .per_case
                .iter()
                .map(|(event_id, bias_pct)| BiasCaseRow {
                    event_id: event_id.clone(),
                    bias_pct: *bias_pct,
                })
                .collect(),
            mean_bias_pct: Some(summary.mean_bias_pct),
            mean_bias_magnitude_pct: Some(summary.mean_bias_pct.abs()),
            sd_cases_pct: summary.sd_cases_pct,
            sdom_cases_pct: summary.sdom_cases_pct,
            excluded: summary
                .excluded
                .iter()
                .map(|(event_id, reason)| ExcludedCaseRow {
                    event_id: event_id.clone(),
                    reason: reason.as_str().to_string(),
                })
                .collect(),
            mean_bias_with_evasives_pct: with_evasives,
            note: String::new(),
        },
        Err(StatsError::NoIncludedCases) => BiasReport {
            per_case: Vec::new(),
            mean_bias_pct: None,
            mean_bias_magnitude_pct: None,
            sd_cases_pct: None,
            sdom_cases_pct: None,
            excluded: Vec::new(),
            mean_bias_with_evasives_pct: with_evasives,
            note: "no cases left after exclusions; bias undefined".into(),
        },
        Err(err) => BiasReport {
            per_case: Vec::new(),
            mean_bias_pct: None,
            mean_bias_magnitude_pct: None,
            sd_cases_pct: None,
            sdom_cases_pct: None,
            excluded: Vec::new(),
            mean_bias_with_evasives_pct: with_evasives,
            note: err.to_string(),
        },
    }
}

fn fmt_real(value: Real) -> String {
    format!("{value}")
}

fn fmt_opt(value: Option<Real>) -> String {
    value.map(fmt_real).unwrap_or_default()
}

struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvSink {
    fn new(dir: &Path, name: &str) -> Self {
        Self {
            path: dir.join(name),
            writer: csv::Writer::from_writer(Vec::new()),
        }
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), ReportError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| ReportError::Write {
                path: self.path.display().to_string(),
                message: e.to_string(),
            })
    }

    fn finish(self) -> Result<PathBuf, ReportError> {
        let to_err = |message: String| ReportError::Write {
            path: self.path.display().to_string(),
            message,
        };
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| to_err(e.to_string()))?;
        std::fs::write(&self.path, bytes).map_err(|e| to_err(e.to_string()))?;
        Ok(self.path)
    }
}

fn ensure_dir(out_dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(out_dir).map_err(|e| ReportError::Write {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes `report.json`.
pub fn emit_report_json(report: &AuditReport, out_dir: &Path) -> Result<PathBuf, ReportError> {
    ensure_dir(out_dir)?;
    let json_path = out_dir.join("report.json");
    let mut body = serde_json::to_string_pretty(report).map_err(|e| ReportError::Write {
        path: json_path.display().to_string(),
        message: e.to_string(),
    })?;
    body.push('\n');
    std::fs::write(&json_path, body).map_err(|e| ReportError::Write {
        path: json_path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(json_path)
}

/// Writes `event_stats.csv`, `aggregates.csv`, and `bias.csv`.
pub fn emit_stats_files(report: &AuditReport, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();

    let mut sink = CsvSink::new(out_dir, "event_stats.csv");
    sink.row([
        "event_id",
        "language",
        "n_numeric",
        "n_evasive",
        "n_excluded_other",
        "mean_fatalities",
        "sdom_fatalities",
        "mean_civilians",
        "sdom_civilians",
        "mean_injured",
        "sdom_injured",
        "mean_children",
        "sdom_children",
    ])?;
    for row in &report.event_stats {
        sink.row([
            row.event_id.clone(),
            row.language.to_string(),
            row.n_numeric.to_string(),
            row.n_evasive.to_string(),
            row.n_excluded_other.to_string(),
            fmt_opt(row.mean_fatalities),
            fmt_opt(row.sdom_fatalities),
            fmt_opt(row.mean_civilians),
            fmt_opt(row.sdom_civilians),
            fmt_opt(row.mean_injured),
            fmt_opt(row.sdom_injured),
            fmt_opt(row.mean_children),
            fmt_opt(row.sdom_children),
        ])?;
    }
    written.push(sink.finish()?);

    let mut sink = CsvSink::new(out_dir, "aggregates.csv");
    sink.row([
        "language",
        "avg_fatalities",
        "avg_injured",
        "avg_civilians",
        "total_evasive",
    ])?;
    for row in &report.aggregates {
        sink.row([
            row.language.to_string(),
            fmt_opt(row.avg_fatalities),
            fmt_opt(row.avg_injured),
            fmt_opt(row.avg_civilians),
            row.total_evasive.to_string(),
        ])?;
    }
    written.push(sink.finish()?);

    let mut sink = CsvSink::new(out_dir, "bias.csv");
    sink.row(["kind", "event_id", "value", "note"])?;
    for case in &report.bias.per_case {
        sink.row([
            "case".to_string(),
            case.event_id.clone(),
            fmt_real(case.bias_pct),
            String::new(),
        ])?;
    }
    for excluded in &report.bias.excluded {
        sink.row([
            "excluded_case".to_string(),
            excluded.event_id.clone(),
            String::new(),
            excluded.reason.clone(),
        ])?;
    }
    sink.row([
        "mean_bias_pct".to_string(),
        String::new(),
        fmt_opt(report.bias.mean_bias_pct),
        report.bias.note.clone(),
    ])?;
    sink.row([
        "mean_bias_magnitude_pct".to_string(),
        String::new(),
        fmt_opt(report.bias.mean_bias_magnitude_pct),
        String::new(),
    ])?;
    sink.row([
        "sd_cases_pct".to_string(),
        String::new(),
        fmt_opt(report.bias.sd_cases_pct),
        "sample standard deviation across cases".to_string(),
    ])?;
    sink.row([
        "sdom_cases_pct".to_string(),
        String::new(),
        fmt_opt(report.bias.sdom_cases_pct),
        "standard deviation of the mean across cases".to_string(),
    ])?;
    sink.row([
        "n_excluded_cases".to_string(),
        String::new(),
        report.bias.excluded.len().to_string(),
        String::new(),
    ])?;
    sink.row([
        "mean_bias_with_evasives_pct".to_string(),
        String::new(),
        fmt_opt(report.bias.mean_bias_with_evasives_pct),
        "evasive answers counted as zero fatalities".to_string(),
    ])?;
    written.push(sink.finish()?);
    Ok(written)
}

/// Writes `wordfreq_<language>.csv` per language plus `keywords.csv`.
pub fn emit_wordfreq_files(
    report: &AuditReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();

    for table in &report.word_frequencies {
        let mut sink = CsvSink::new(out_dir, &format!("wordfreq_{}.csv", table.language));
        sink.row(["rank", "stem", "count", "uncertainty"])?;
        for entry in &table.entries {
            sink.row([
                entry.rank.to_string(),
                entry.stem.clone(),
                entry.count.to_string(),
                fmt_real(entry.uncertainty),
            ])?;
        }
        written.push(sink.finish()?);
    }

    let mut sink = CsvSink::new(out_dir, "keywords.csv");
    sink.row([
        "category",
        "attacker_language",
        "attacker_count",
        "target_language",
        "target_count",
        "ratio",
        "note",
    ])?;
    for row in &report.keywords.categories {
        sink.row([
            row.category.clone(),
            report.keywords.attacker_language.to_string(),
            row.attacker_count.to_string(),
            report.keywords.target_language.to_string(),
            row.target_count.to_string(),
            fmt_opt(row.ratio),
            if row.ratio.is_none() {
                "n/a (0 denominator)".to_string()
            } else {
                String::new()
            },
        ])?;
    }
    written.push(sink.finish()?);
    Ok(written)
}

/// Writes the plot-ready bar data for the per-event and per-language panels.
pub fn emit_plotdata_files(
    report: &AuditReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();

    let mut sink = CsvSink::new(out_dir, "plotdata_panel_b.csv");
    sink.row(["event_index", "language", "mean", "sdom"])?;
    let index_of: BTreeMap<&str, usize> = report
        .events
        .iter()
        .map(|e| (e.event_id.as_str(), e.event_index))
        .collect();
    for row in &report.event_stats {
        sink.row([
            index_of
                .get(row.event_id.as_str())
                .map(|i| i.to_string())
                .unwrap_or_default(),
            row.language.to_string(),
            fmt_opt(row.mean_fatalities),
            fmt_opt(row.sdom_fatalities),
        ])?;
    }
    written.push(sink.finish()?);

    let mut sink = CsvSink::new(out_dir, "plotdata_panel_c.csv");
    sink.row(["language", "quantity", "value", "sdom"])?;
    for agg in &report.aggregates {
        let stats_for_language: Vec<&EventStatsRow> = report
            .event_stats
            .iter()
            .filter(|s| s.language == agg.language)
            .collect();
        let spread = |pick: fn(&EventStatsRow) -> Option<Real>| -> Option<Real> {
            let values: Vec<Real> = stats_for_language
                .iter()
                .map(|s| pick(s))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect();
            crate::stats::sdom(&values)
        };
        for (quantity, value, sdom) in [
            (
                "fatalities",
                agg.avg_fatalities,
                spread(|s| s.mean_fatalities),
            ),
            ("injured", agg.avg_injured, spread(|s| s.mean_injured)),
            ("civilians", agg.avg_civilians, spread(|s| s.mean_civilians)),
        ] {
            sink.row([
                agg.language.to_string(),
                quantity.to_string(),
                fmt_opt(value),
                fmt_opt(sdom),
            ])?;
        }
        sink.row([
            agg.language.to_string(),
            "evasive".to_string(),
            agg.total_evasive.to_string(),
            String::new(),
        ])?;
    }
    written.push(sink.finish()?);

    Ok(written)
}

/// Writes the full report: `report.json` and every CSV table.
pub fn emit_report(report: &AuditReport, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = vec![emit_report_json(report, out_dir)?];
    written.extend(emit_stats_files(report, out_dir)?);
    written.extend(emit_wordfreq_files(report, out_dir)?);
    written.extend(emit_plotdata_files(report, out_dir)?);
    Ok(written)
}

/// Writes `coded.csv` and `worklist.csv` for the coding stage.
pub fn emit_coding(
    coded: &[CodedAnswer],
    worklist_rows: &[WorklistRow],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir).map_err(|e| ReportError::Write {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut written = Vec::new();

    let mut sink = CsvSink::new(out_dir, "coded.csv");
    sink.row([
        "event_id",
        "language",
        "repeat_index",
        "classification",
        "fatalities_total",
        "civilians",
        "injured",
        "children",
        "provenance",
        "note",
    ])?;
    for answer in coded {
        sink.row([
            answer.trial.event_id.clone(),
            answer.trial.language.to_string(),
            answer.trial.repeat_index.to_string(),
            answer.classification.to_string(),
            fmt_opt(answer.fatalities_total),
            fmt_opt(answer.civilians),
            fmt_opt(answer.injured),
            fmt_opt(answer.children),
            match answer.provenance {
                crate::coding::Provenance::Auto => "auto".to_string(),
                crate::coding::Provenance::ManualOverride => "manual_override".to_string(),
            },
            answer.note.clone(),
        ])?;
    }
    written.push(sink.finish()?);

    let mut sink = CsvSink::new(out_dir, "worklist.csv");
    sink.row([
        "event_id",
        "language",
        "repeat_index",
        "answer_backtranslated",
        "note",
    ])?;
    for row in worklist_rows {
        sink.row([
            row.event_id.clone(),
            row.language.to_string(),
            row.repeat_index.to_string(),
            row.answer_backtranslated.clone(),
            row.note.clone(),
        ])?;
    }
    written.push(sink.finish()?);

    Ok(written)
}
