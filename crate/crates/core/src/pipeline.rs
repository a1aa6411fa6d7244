//! Executes the audit scheme for each (event, language) cell and persists the
//! logfile.
//!
//! Per language: the primer is translated once at temperature zero; each
//! question is translated once at temperature zero; each translated question
//! is asked `repeats` times at the query temperature with the translated
//! primer, every ask a fresh memoryless exchange; every non-empty answer is
//! back-translated into the pivot language. Records are appended as they are
//! produced (so an interrupted run can be resumed) and the finalized file is
//! rewritten in canonical order, which makes logfiles independent of
//! scheduling.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::backend::{
    format_timestamp, translate, BackendError, ChatBackend, ChatRequest, ChatSettings,
};
use crate::events::ConflictEvent;
use crate::lang::{LanguageCode, LanguageRole, LanguageSlot};
use crate::logfile::{
    canonical_sort, read_records, write_records, EventMeta, FailureRecord, FailureStage,
    LogAppender, LogRecord, LogfileError, PrimerTranslation, QuestionTranslation, RunMeta,
    RunSummary, TrialRecord, SCHEMA_VERSION,
};
use crate::prompts::{render_question, Primer, PromptError, QuestionTemplate};

/// Everything a run needs. Defaults for `repeats`, `query_temperature`, and
/// `max_tokens` come from the run config (10, 0.6, 1000).
#[derive(Debug, Clone, PartialEq)]
pub struct AuditPlan {
    pub dyad_name: String,
    pub events: Vec<ConflictEvent>,
    pub languages: Vec<LanguageSlot>,
    pub template: QuestionTemplate,
    pub primer: Primer,
    pub repeats: u32,
    pub query_temperature: f64,
    pub seed: u64,
    pub model_id: String,
    pub max_tokens: u32,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Logfile(#[from] LogfileError),
    #[error("logfile does not match the plan: {field} differs")]
    PlanMismatch { field: &'static str },
    #[error("logfile has no run_meta record; cannot resume")]
    MissingRunMeta,
}

/// What a finished (or resumed) run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub logfile: PathBuf,
    pub trials: u64,
    pub failures: u64,
    pub requests: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl AuditPlan {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |m: String| Err(PipelineError::InvalidPlan(m));
        if self.repeats == 0 {
            return invalid("repeats must be at least 1".into());
        }
        if !(0.0..=2.0).contains(&self.query_temperature) {
            return invalid(format!(
                "query_temperature {} outside [0, 2]",
                self.query_temperature
            ));
        }
        if self.max_tokens == 0 {
            return invalid("max_tokens must be at least 1".into());
        }
        let attackers = self
            .languages
            .iter()
            .filter(|l| l.role == LanguageRole::AttackerLanguage)
            .count();
        let targets = self
            .languages
            .iter()
            .filter(|l| l.role == LanguageRole::TargetLanguage)
            .count();
        if self.languages.len() != 2 || attackers != 1 || targets != 1 {
            return invalid(
                "languages must be exactly one attacker_language and one target_language".into(),
            );
        }
        if self.languages[0].code == self.languages[1].code {
            return invalid("attacker and target languages must differ".into());
        }
        let mut seen = HashSet::new();
        for event in &self.events {
            if !seen.insert(event.event_id.as_str()) {
                return invalid(format!("duplicate event_id '{}'", event.event_id));
            }
        }
        Ok(())
    }

    /// Events in canonical chronological order.
    fn sorted_events(&self) -> Vec<ConflictEvent> {
        let mut events = self.events.clone();
        events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        events
    }

    /// Languages in canonical (code) order.
    fn sorted_languages(&self) -> Vec<LanguageSlot> {
        let mut languages = self.languages.clone();
        languages.sort_by(|a, b| a.code.cmp(&b.code));
        languages
    }

    fn settings(&self) -> ChatSettings {
        ChatSettings {
            model_id: self.model_id.clone(),
            max_tokens: self.max_tokens,
        }
    }

    pub fn run_meta(&self) -> RunMeta {
        RunMeta {
            schema: SCHEMA_VERSION.to_string(),
            dyad_name: self.dyad_name.clone(),
            model_id: self.model_id.clone(),
            seed: self.seed,
            repeats: self.repeats,
            query_temperature: self.query_temperature,
            max_tokens: self.max_tokens,
            languages: self.sorted_languages(),
            template: self.template.clone(),
            primer: self.primer.clone(),
            events: self.sorted_events().iter().map(EventMeta::from).collect(),
        }
    }
}

/// Runs the full scheme and writes a fresh logfile at `out_path`.
pub fn run_audit(
    plan: &AuditPlan,
    backend: &dyn ChatBackend,
    out_path: &Path,
) -> Result<RunOutcome, PipelineError> {
    execute(plan, backend, out_path, Vec::new())
}

/// Completes a partial logfile: cells already recorded are skipped, only
/// missing (event, language, repeat) trials are executed, and existing
/// translations are reused. The finalized file is a superset of the prefix.
pub fn resume_audit(
    logfile: &Path,
    plan: &AuditPlan,
    backend: &dyn ChatBackend,
) -> Result<RunOutcome, PipelineError> {
    let existing = read_records(logfile)?;
    let meta = existing
        .iter()
        .find_map(|r| match r {
            LogRecord::RunMeta(m) => Some(m.clone()),
            _ => None,
        })
        .ok_or(PipelineError::MissingRunMeta)?;
    check_meta(plan, &meta)?;
    execute(plan, backend, logfile, existing)
}

fn check_meta(plan: &AuditPlan, meta: &RunMeta) -> Result<(), PipelineError> {
    let expected = plan.run_meta();
    let mismatch = |field| Err(PipelineError::PlanMismatch { field });
    if meta.dyad_name != expected.dyad_name {
        return mismatch("dyad_name");
    }
    if meta.seed != expected.seed {
        return mismatch("seed");
    }
    if meta.repeats != expected.repeats {
        return mismatch("repeats");
    }
    if meta.model_id != expected.model_id {
        return mismatch("model_id");
    }
    if meta.query_temperature != expected.query_temperature {
        return mismatch("query_temperature");
    }
    if meta.max_tokens != expected.max_tokens {
        return mismatch("max_tokens");
    }
    if meta.languages != expected.languages {
        return mismatch("languages");
    }
    if meta.template != expected.template {
        return mismatch("template");
    }
    if meta.primer != expected.primer {
        return mismatch("primer");
    }
    if meta.events != expected.events {
        return mismatch("events");
    }
    Ok(())
}

/// Sums a record set into the run_summary totals.
pub fn summarize(records: &[LogRecord]) -> RunSummary {
    let mut summary = RunSummary {
        trials: 0,
        failures: 0,
        requests: 0,
        prompt_tokens: 0,
        completion_tokens: 0,
    };
    for record in records {
        match record {
            LogRecord::Trial(t) => {
                summary.trials += 1;
                summary.requests += t.request_refs.len() as u64;
                summary.prompt_tokens += t.query_prompt_tokens + t.backtranslation_prompt_tokens;
                summary.completion_tokens +=
                    t.query_completion_tokens + t.backtranslation_completion_tokens;
            }
            LogRecord::Failure(_) => summary.failures += 1,
            LogRecord::PrimerTranslation(p) => {
                summary.requests += u64::from(p.request.is_some());
                summary.prompt_tokens += p.prompt_tokens.unwrap_or(0);
                summary.completion_tokens += p.completion_tokens.unwrap_or(0);
            }
            LogRecord::QuestionTranslation(q) => {
                summary.requests += u64::from(q.request.is_some());
                summary.prompt_tokens += q.prompt_tokens.unwrap_or(0);
                summary.completion_tokens += q.completion_tokens.unwrap_or(0);
            }
            LogRecord::RunMeta(_) | LogRecord::RunSummary(_) => {}
        }
    }
    summary
}

type CellKey = (String, LanguageCode, u32);

fn execute(
    plan: &AuditPlan,
    backend: &dyn ChatBackend,
    out_path: &Path,
    existing: Vec<LogRecord>,
) -> Result<RunOutcome, PipelineError> {
    plan.validate()?;
    let events = plan.sorted_events();
    let languages = plan.sorted_languages();
    let settings = plan.settings();

    // Rendering is pure; surface template errors before any backend call.
    let questions: Vec<String> = events
        .iter()
        .map(|e| render_question(&plan.template, e))
        .collect::<Result<_, _>>()?;

    let mut primer_translations: HashMap<LanguageCode, String> = HashMap::new();
    let mut question_translations: HashMap<(String, LanguageCode), String> = HashMap::new();
    let mut done: HashSet<CellKey> = HashSet::new();
    let mut records: Vec<LogRecord> = vec![LogRecord::RunMeta(plan.run_meta())];
    let resuming = !existing.is_empty();

    for record in existing {
        match record {
            // The plan's meta was verified to match; one copy is enough, and
            // the summary is recomputed at finalization.
            LogRecord::RunMeta(_) | LogRecord::RunSummary(_) => {}
            LogRecord::PrimerTranslation(p) => {
                primer_translations.insert(p.language.clone(), p.translated_text.clone());
                records.push(LogRecord::PrimerTranslation(p));
            }
            LogRecord::QuestionTranslation(q) => {
                question_translations.insert(
                    (q.event_id.clone(), q.language.clone()),
                    q.translated_text.clone(),
                );
                records.push(LogRecord::QuestionTranslation(q));
            }
            LogRecord::Trial(t) => {
                done.insert((t.event_id.clone(), t.language.clone(), t.repeat_index));
                records.push(LogRecord::Trial(t));
            }
            LogRecord::Failure(f) => {
                done.insert((f.event_id.clone(), f.language.clone(), f.repeat_index));
                records.push(LogRecord::Failure(f));
            }
        }
    }

    let mut appender = if resuming {
        LogAppender::open_append(out_path)?
    } else {
        let mut a = LogAppender::create(out_path)?;
        a.append(&records[0])?;
        a
    };

    let emit = |records: &mut Vec<LogRecord>,
                appender: &mut LogAppender,
                record: LogRecord|
     -> Result<(), PipelineError> {
        appender.append(&record)?;
        records.push(record);
        Ok(())
    };

    for slot in &languages {
        let language = &slot.code;
        let language_pending = |done: &HashSet<CellKey>| {
            events.iter().any(|e| {
                (0..plan.repeats)
                    .any(|r| !done.contains(&(e.event_id.clone(), language.clone(), r)))
            })
        };
        if !language_pending(&done) {
            continue;
        }

        let primer_text = match primer_translations.get(language) {
            Some(text) => text.clone(),
            None => match translate(
                backend,
                &settings,
                &plan.primer.text,
                &LanguageCode::pivot(),
                language,
                0,
            ) {
                Ok(out) => {
                    let record = PrimerTranslation {
                        language: language.clone(),
                        source_text: plan.primer.text.clone(),
                        translated_text: out.text.clone(),
                        request: out.key,
                        prompt_tokens: out.response.as_ref().map(|r| r.prompt_tokens),
                        completion_tokens: out.response.as_ref().map(|r| r.completion_tokens),
                        timestamp: out.response.as_ref().map(|r| format_timestamp(r.timestamp)),
                    };
                    emit(
                        &mut records,
                        &mut appender,
                        LogRecord::PrimerTranslation(record),
                    )?;
                    primer_translations.insert(language.clone(), out.text.clone());
                    out.text
                }
                Err(error) => {
                    // The whole language is unusable; record every missing
                    // trial as failed and move on.
                    for event in &events {
                        fail_cell(
                            &mut records,
                            &mut appender,
                            &mut done,
                            event,
                            language,
                            0,
                            plan.repeats,
                            FailureStage::PrimerTranslation,
                            &error,
                        )?;
                    }
                    continue;
                }
            },
        };

        for (event, question) in events.iter().zip(&questions) {
            let cell_done = (0..plan.repeats)
                .all(|r| done.contains(&(event.event_id.clone(), language.clone(), r)));
            if cell_done {
                continue;
            }

            let cell = (event.event_id.clone(), language.clone());
            let question_text = match question_translations.get(&cell) {
                Some(text) => text.clone(),
                None => match translate(
                    backend,
                    &settings,
                    question,
                    &LanguageCode::pivot(),
                    language,
                    0,
                ) {
                    Ok(out) => {
                        let record = QuestionTranslation {
                            event_id: event.event_id.clone(),
                            language: language.clone(),
                            source_text: question.clone(),
                            translated_text: out.text.clone(),
                            request: out.key,
                            prompt_tokens: out.response.as_ref().map(|r| r.prompt_tokens),
                            completion_tokens: out.response.as_ref().map(|r| r.completion_tokens),
                            timestamp: out.response.as_ref().map(|r| format_timestamp(r.timestamp)),
                        };
                        emit(
                            &mut records,
                            &mut appender,
                            LogRecord::QuestionTranslation(record),
                        )?;
                        question_translations.insert(cell.clone(), out.text.clone());
                        out.text
                    }
                    Err(error) => {
                        fail_cell(
                            &mut records,
                            &mut appender,
                            &mut done,
                            event,
                            language,
                            0,
                            plan.repeats,
                            FailureStage::QuestionTranslation,
                            &error,
                        )?;
                        continue;
                    }
                },
            };

            for repeat in 0..plan.repeats {
                let key = (event.event_id.clone(), language.clone(), repeat);
                if done.contains(&key) {
                    continue;
                }
                let query = ChatRequest {
                    model_id: plan.model_id.clone(),
                    system_text: primer_text.clone(),
                    user_text: question_text.clone(),
                    temperature: plan.query_temperature,
                    max_tokens: plan.max_tokens,
                    occurrence_index: repeat,
                };
                let query_key = query.key();
                let response = match backend.complete(&query) {
                    Ok(response) => response,
                    Err(error) => {
                        fail_cell(
                            &mut records,
                            &mut appender,
                            &mut done,
                            event,
                            language,
                            repeat,
                            plan.repeats,
                            FailureStage::Query,
                            &error,
                        )?;
                        break;
                    }
                };

                let answer_native = response.text.clone();
                let backtranslation = if language.is_pivot() || answer_native.is_empty() {
                    None
                } else {
                    match translate(
                        backend,
                        &settings,
                        &answer_native,
                        language,
                        &LanguageCode::pivot(),
                        repeat,
                    ) {
                        // An empty back-translation of a non-empty answer is
                        // uncodable and breaks the trial contract; treat it
                        // like any other back-translation failure.
                        Ok(out) if out.text.is_empty() => {
                            let error = BackendError::Io(
                                "backend returned an empty back-translation".into(),
                            );
                            fail_cell(
                                &mut records,
                                &mut appender,
                                &mut done,
                                event,
                                language,
                                repeat,
                                plan.repeats,
                                FailureStage::BackTranslation,
                                &error,
                            )?;
                            break;
                        }
                        Ok(out) => Some(out),
                        Err(error) => {
                            fail_cell(
                                &mut records,
                                &mut appender,
                                &mut done,
                                event,
                                language,
                                repeat,
                                plan.repeats,
                                FailureStage::BackTranslation,
                                &error,
                            )?;
                            break;
                        }
                    }
                };

                let mut request_refs = vec![query_key];
                let mut answer_backtranslated = answer_native.clone();
                let mut bt_prompt_tokens = 0;
                let mut bt_completion_tokens = 0;
                let mut bt_timestamp = None;
                if let Some(out) = backtranslation {
                    answer_backtranslated = out.text;
                    if let Some(key) = out.key {
                        request_refs.push(key);
                    }
                    if let Some(resp) = out.response {
                        bt_prompt_tokens = resp.prompt_tokens;
                        bt_completion_tokens = resp.completion_tokens;
                        bt_timestamp = Some(format_timestamp(resp.timestamp));
                    }
                }

                let trial = TrialRecord {
                    event_id: event.event_id.clone(),
                    language: language.clone(),
                    repeat_index: repeat,
                    primer_translated: primer_text.clone(),
                    question_translated: question_text.clone(),
                    answer_native,
                    answer_backtranslated,
                    request_refs,
                    query_prompt_tokens: response.prompt_tokens,
                    query_completion_tokens: response.completion_tokens,
                    backtranslation_prompt_tokens: bt_prompt_tokens,
                    backtranslation_completion_tokens: bt_completion_tokens,
                    query_timestamp: format_timestamp(response.timestamp),
                    backtranslation_timestamp: bt_timestamp,
                };
                emit(&mut records, &mut appender, LogRecord::Trial(trial))?;
                done.insert(key);
            }
        }
    }

    let summary = summarize(&records);
    let outcome = RunOutcome {
        logfile: out_path.to_path_buf(),
        trials: summary.trials,
        failures: summary.failures,
        requests: summary.requests,
        prompt_tokens: summary.prompt_tokens,
        completion_tokens: summary.completion_tokens,
    };
    records.push(LogRecord::RunSummary(summary));
    canonical_sort(&mut records);
    write_records(&records, out_path)?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn fail_cell(
    records: &mut Vec<LogRecord>,
    appender: &mut LogAppender,
    done: &mut HashSet<CellKey>,
    event: &ConflictEvent,
    language: &LanguageCode,
    from_repeat: u32,
    repeats: u32,
    stage: FailureStage,
    error: &BackendError,
) -> Result<(), PipelineError> {
    for repeat in from_repeat..repeats {
        let key = (event.event_id.clone(), language.clone(), repeat);
        if done.contains(&key) {
            continue;
        }
        let record = FailureRecord {
            event_id: event.event_id.clone(),
            language: language.clone(),
            repeat_index: repeat,
            stage,
            error_class: error.class().to_string(),
            message: error.to_string(),
        };
        appender.append(&LogRecord::Failure(record.clone()))?;
        records.push(LogRecord::Failure(record));
        done.insert(key);
    }
    Ok(())
}
