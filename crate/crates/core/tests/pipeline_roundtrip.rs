//! End-to-end pipeline behavior: request counts, canonical ordering,
//! record/replay determinism, resume, and failure recording.

mod common;

use common::{demo_backend, demo_plan};
use lingua_audit_core::backend::{
    ChatBackend, ChatRequest, ChatResponse, CountingBackend, RecordingBackend, ReplayBackend,
    ScriptedBackend,
};
use lingua_audit_core::lang::{LanguageCode, LanguageRole, LanguageSlot};
use lingua_audit_core::logfile::{read_records, validate, LogRecord};
use lingua_audit_core::pipeline::{resume_audit, run_audit, PipelineError};

fn trial_records(records: &[LogRecord]) -> Vec<&lingua_audit_core::logfile::TrialRecord> {
    records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Trial(t) => Some(t),
            _ => None,
        })
        .collect()
}

#[test]
fn demo_run_issues_the_expected_requests_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let plan = demo_plan(10);
    let backend = CountingBackend::new(demo_backend());

    let outcome = run_audit(&plan, &backend, &out).unwrap();
    assert_eq!(outcome.trials, 40);
    assert_eq!(outcome.failures, 0);
    assert_eq!(outcome.requests, 86);
    assert_eq!(backend.calls(), 86);

    let requests = backend.requests();
    // Translation requests always carry temperature 0; queries always carry
    // the plan temperature. Nothing else appears.
    assert!(requests
        .iter()
        .all(|r| r.temperature == 0.0 || r.temperature == plan.query_temperature));
    let queries: Vec<_> = requests.iter().filter(|r| r.temperature == 0.6).collect();
    assert_eq!(queries.len(), 40);
    let back_translations: Vec<_> = requests
        .iter()
        .filter(|r| r.temperature == 0.0 && r.user_text.contains("into English"))
        .collect();
    assert_eq!(back_translations.len(), 40);
    let primer_translations: Vec<_> = requests
        .iter()
        .filter(|r| {
            r.temperature == 0.0
                && !r.user_text.contains("into English")
                && r.user_text
                    .contains("expert of quantitative military history")
        })
        .collect();
    assert_eq!(primer_translations.len(), 2);
    let question_translations: Vec<_> = requests
        .iter()
        .filter(|r| {
            r.temperature == 0.0
                && !r.user_text.contains("into English")
                && !r
                    .user_text
                    .contains("expert of quantitative military history")
        })
        .collect();
    assert_eq!(question_translations.len(), 4);

    // Canonical trial order: (event_date, event_id, language, repeat).
    let records = read_records(&out).unwrap();
    let trials = trial_records(&records);
    assert_eq!(trials.len(), 40);
    let keys: Vec<_> = trials
        .iter()
        .map(|t| (t.event_id.clone(), t.language.to_string(), t.repeat_index))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys[0], ("GAZA-0821".to_string(), "ar".to_string(), 0));

    validate(&out).unwrap();
}

#[test]
fn trials_never_mix_languages_and_translations_run_cold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let plan = demo_plan(3);
    let backend = CountingBackend::new(demo_backend());
    run_audit(&plan, &backend, &out).unwrap();

    for request in backend.requests() {
        if request.temperature != 0.0 {
            // Query: translated primer and translated question share the
            // language tag.
            let tag: &str = if request.user_text.starts_with("[he]") {
                "[he]"
            } else {
                "[ar]"
            };
            assert!(
                request.system_text.starts_with(tag),
                "{:?}",
                request.system_text
            );
        }
    }
    let records = read_records(&out).unwrap();
    for trial in trial_records(&records) {
        let tag = format!("[{}]", trial.language);
        assert!(trial.primer_translated.starts_with(&tag));
        assert!(trial.question_translated.starts_with(&tag));
        assert!(trial.answer_native.starts_with(&tag));
        assert!(!trial.answer_backtranslated.starts_with(&tag));
        assert!(!trial.answer_backtranslated.is_empty());
    }
}

#[test]
fn record_then_replay_is_byte_identical_and_order_independent() {
    let dir = tempfile::tempdir().unwrap();
    let record_log = dir.path().join("record.jsonl");
    let plan = demo_plan(10);

    let recorder = RecordingBackend::create(demo_backend(), &record_log).unwrap();
    let first = dir.path().join("first.jsonl");
    run_audit(&plan, &recorder, &first).unwrap();
    drop(recorder);

    let replay = ReplayBackend::from_path(&record_log).unwrap();
    let second = dir.path().join("second.jsonl");
    let third = dir.path().join("third.jsonl");
    run_audit(&plan, &replay, &second).unwrap();
    run_audit(&plan, &replay, &third).unwrap();

    let first_bytes = std::fs::read(&first).unwrap();
    assert_eq!(first_bytes, std::fs::read(&second).unwrap());
    assert_eq!(first_bytes, std::fs::read(&third).unwrap());
}

#[test]
fn replay_serves_content_keyed_responses_in_any_order() {
    let dir = tempfile::tempdir().unwrap();
    let record_log = dir.path().join("record.jsonl");
    let recorder = RecordingBackend::create(demo_backend(), &record_log).unwrap();
    let request = |occurrence: u32| ChatRequest {
        model_id: "gpt-3.5-turbo".into(),
        system_text: "[he] primer".into(),
        user_text: "[he] In the Israeli airstrike Nuseirat".into(),
        temperature: 0.6,
        max_tokens: 1000,
        occurrence_index: occurrence,
    };
    let a = recorder.complete(&request(0)).unwrap();
    let b = recorder.complete(&request(1)).unwrap();
    drop(recorder);

    let replay = ReplayBackend::from_path(&record_log).unwrap();
    // Reverse order; keying is content-based, not call-order-based.
    assert_eq!(replay.complete(&request(1)).unwrap().text, b.text);
    assert_eq!(replay.complete(&request(0)).unwrap().text, a.text);
}

#[test]
fn resume_executes_only_missing_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let plan = demo_plan(10);
    run_audit(&plan, &demo_backend(), &out).unwrap();

    // Drop the 10 trials of one cell (and the summary) to fake a crash.
    let records = read_records(&out).unwrap();
    let total = records.len();
    let pruned: Vec<LogRecord> = records
        .into_iter()
        .filter(|r| match r {
            LogRecord::Trial(t) => !(t.event_id == "GAZA-0901" && t.language.as_str() == "ar"),
            LogRecord::RunSummary(_) => false,
            _ => true,
        })
        .collect();
    assert_eq!(pruned.len(), total - 11);
    lingua_audit_core::logfile::write_records(&pruned, &out).unwrap();

    let backend = CountingBackend::new(demo_backend());
    let outcome = resume_audit(&out, &plan, &backend).unwrap();
    assert_eq!(outcome.trials, 40);
    // 10 queries + 10 back-translations; translations are reused.
    assert_eq!(backend.calls(), 20);
    assert!(backend
        .requests()
        .iter()
        .all(|r| !r.user_text.contains("into Arabic")));
    validate(&out).unwrap();
}

#[test]
fn resume_of_a_complete_logfile_makes_no_backend_calls() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let plan = demo_plan(4);
    run_audit(&plan, &demo_backend(), &out).unwrap();
    let before = std::fs::read(&out).unwrap();

    let backend = CountingBackend::new(demo_backend());
    resume_audit(&out, &plan, &backend).unwrap();
    assert_eq!(backend.calls(), 0);
    assert_eq!(before, std::fs::read(&out).unwrap());
}

#[test]
fn resume_rejects_a_mismatched_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    run_audit(&demo_plan(2), &demo_backend(), &out).unwrap();

    let mut other = demo_plan(2);
    other.dyad_name = "other-dyad".into();
    let err = resume_audit(&out, &other, &demo_backend()).unwrap_err();
    assert!(
        matches!(err, PipelineError::PlanMismatch { field: "dyad_name" }),
        "{err}"
    );

    let mut reseeded = demo_plan(2);
    reseeded.seed = 8;
    let err = resume_audit(&out, &reseeded, &demo_backend()).unwrap_err();
    assert!(
        matches!(err, PipelineError::PlanMismatch { field: "seed" }),
        "{err}"
    );
}

#[test]
fn pivot_language_trials_skip_translation_calls() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let mut plan = demo_plan(2);
    plan.languages = vec![
        LanguageSlot {
            code: LanguageCode::new("he"),
            role: LanguageRole::AttackerLanguage,
        },
        LanguageSlot {
            code: LanguageCode::new("en"),
            role: LanguageRole::TargetLanguage,
        },
    ];
    let backend = CountingBackend::new(
        demo_backend()
            .with_rule(
                &["In the Israeli airstrike", "Nuseirat"],
                "5 people were killed.",
            )
            .with_rule(
                &["In the Israeli airstrike", "Rafah"],
                "6 people were killed.",
            ),
    );
    let outcome = run_audit(&plan, &backend, &out).unwrap();
    assert_eq!(outcome.trials, 8);
    // he: 1 primer + 2 questions + 4 queries + 4 back-translations = 11.
    // en: no translation calls at all, 4 queries.
    assert_eq!(backend.calls(), 15);

    let records = read_records(&out).unwrap();
    for trial in trial_records(&records) {
        if trial.language.as_str() == "en" {
            assert_eq!(trial.answer_native, trial.answer_backtranslated);
            assert_eq!(trial.request_refs.len(), 1);
            assert!(trial.backtranslation_timestamp.is_none());
        } else {
            assert_eq!(trial.request_refs.len(), 2);
        }
    }
    let pivot_primer = records.iter().find_map(|r| match r {
        LogRecord::PrimerTranslation(p) if p.language.as_str() == "en" => Some(p),
        _ => None,
    });
    let primer = pivot_primer.expect("pivot primer translation record exists");
    assert!(primer.request.is_none());
    assert_eq!(primer.source_text, primer.translated_text);
}

#[test]
fn backend_failures_are_recorded_and_the_run_continues() {
    // No query rule for the Arabic Rafah cell: those 10 queries fail.
    let backend = ScriptedBackend::default()
        .with_rule(
            &["into Hebrew", "expert of quantitative military history"],
            "[he] primer",
        )
        .with_rule(
            &["into Arabic", "expert of quantitative military history"],
            "[ar] primer",
        )
        .with_rule(&["into Hebrew", "Nuseirat"], "[he] q-nuseirat")
        .with_rule(&["into Arabic", "Nuseirat"], "[ar] q-nuseirat")
        .with_rule(&["into Hebrew", "Rafah"], "[he] q-rafah")
        .with_rule(&["into Arabic", "Rafah"], "[ar] q-rafah")
        .with_rule(&["[he] q-nuseirat"], "[he] 2 killed")
        .with_rule(&["[ar] q-nuseirat"], "[ar] 3 killed")
        .with_rule(&["[he] q-rafah"], "[he] 4 killed")
        .with_rule(&["into English"], "some killed");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let plan = demo_plan(10);
    let outcome = run_audit(&plan, &backend, &out).unwrap();
    assert_eq!(outcome.trials, 30);
    assert_eq!(outcome.failures, 10);

    let records = read_records(&out).unwrap();
    let failures: Vec<_> = records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Failure(f) => Some(f),
            _ => None,
        })
        .collect();
    assert_eq!(failures.len(), 10);
    assert!(failures
        .iter()
        .all(|f| f.event_id == "GAZA-0901" && f.language.as_str() == "ar"));
    assert!(failures.iter().all(|f| f.error_class == "no_scripted_rule"));
    validate(&out).unwrap();

    // Failures are terminal: resume does not retry them.
    let counting = CountingBackend::new(demo_backend());
    resume_audit(&out, &plan, &counting).unwrap();
    assert_eq!(counting.calls(), 0);
}

#[test]
fn ten_events_two_languages_ten_repeats_count_structure() {
    let mut plan = demo_plan(10);
    plan.events = (0..10)
        .map(|i| {
            common::event(
                &format!("E{i:02}"),
                &format!("2014-08-{:02}", i + 1),
                &format!("town-{i}"),
                "airstrike",
            )
        })
        .collect();
    let backend = ScriptedBackend::new(lingua_audit_core::backend::Script {
        rules: Vec::new(),
        default_response: Some("a dozen villages heard it".into()),
    });
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let outcome = run_audit(&plan, &backend, &out).unwrap();
    assert_eq!(outcome.trials, 200);

    let records = read_records(&out).unwrap();
    let mut primer_translations = 0;
    let mut question_translations = 0;
    let mut trials = 0;
    for record in &records {
        match record {
            LogRecord::PrimerTranslation(_) => primer_translations += 1,
            LogRecord::QuestionTranslation(_) => question_translations += 1,
            LogRecord::Trial(_) => trials += 1,
            _ => {}
        }
    }
    assert_eq!(trials, 200);
    assert_eq!(primer_translations, 2);
    assert_eq!(question_translations, 20);
    validate(&out).unwrap();
}

#[test]
fn empty_event_list_yields_a_minimal_valid_logfile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let mut plan = demo_plan(10);
    plan.events.clear();
    let backend = CountingBackend::new(demo_backend());
    let outcome = run_audit(&plan, &backend, &out).unwrap();
    assert_eq!(outcome.trials, 0);
    assert_eq!(backend.calls(), 0);
    validate(&out).unwrap();
}

#[test]
fn empty_back_translations_are_recorded_as_failures() {
    // A backend that answers one cell's queries but back-translates them to
    // nothing; the resulting trials are uncodable.
    fn scripted_with_empty_bt() -> ScriptedBackend {
        ScriptedBackend::default()
            .with_rule(&["into Hebrew", "expert"], "[he] primer")
            .with_rule(&["into Arabic", "expert"], "[ar] primer")
            .with_rule(&["into Hebrew", "Nuseirat"], "[he] q1")
            .with_rule(&["into Arabic", "Nuseirat"], "[ar] q1")
            .with_rule(&["into Hebrew", "Rafah"], "[he] q2")
            .with_rule(&["into Arabic", "Rafah"], "[ar] q2")
            .with_rule(&["[he] q1"], "[he] vanish")
            .with_rule(&["[ar] q1"], "[ar] 3 killed")
            .with_rule(&["[he] q2"], "[he] 4 killed")
            .with_rule(&["[ar] q2"], "[ar] 5 killed")
            .with_rule(&["into English", "[he] vanish"], "")
            .with_rule(&["into English"], "some killed")
    }

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.jsonl");
    let plan = demo_plan(3);
    let outcome = run_audit(&plan, &scripted_with_empty_bt(), &out).unwrap();
    assert_eq!(outcome.failures, 3, "the he/Nuseirat cell fails");
    assert_eq!(outcome.trials, 9);

    let records = read_records(&out).unwrap();
    let failure = records
        .iter()
        .find_map(|r| match r {
            LogRecord::Failure(f) => Some(f),
            _ => None,
        })
        .unwrap();
    assert_eq!(failure.stage.to_string(), "back_translation");
    assert!(failure.message.contains("empty back-translation"));
    validate(&out).unwrap();
}

#[test]
fn recording_is_safe_and_replayable_under_concurrency() {
    use std::sync::Arc;

    let dir = tempfile::tempdir().unwrap();
    let record_log = dir.path().join("record.jsonl");
    let recorder = Arc::new(RecordingBackend::create(demo_backend(), &record_log).unwrap());

    let request = |occurrence: u32| ChatRequest {
        model_id: "gpt-3.5-turbo".into(),
        system_text: "[he] primer".into(),
        user_text: "[he] q Nuseirat".into(),
        temperature: 0.6,
        max_tokens: 1000,
        occurrence_index: occurrence,
    };
    let handles: Vec<_> = (0..4)
        .map(|thread| {
            let recorder = Arc::clone(&recorder);
            std::thread::spawn(move || {
                // Threads race on overlapping occurrence ranges, so the same
                // key is recorded from several threads at once.
                for occurrence in 0..8u32 {
                    recorder
                        .complete(&request(occurrence + (thread % 2)))
                        .unwrap();
                }
            })
        })
        .collect();
    for handle in handles {
        handle.join().unwrap();
    }
    drop(recorder);

    // Distinct keys recorded exactly once each, all replayable.
    let replay = ReplayBackend::from_path(&record_log).unwrap();
    assert_eq!(replay.len(), 9); // occurrences 0..=8
    for occurrence in 0..9u32 {
        replay.complete(&request(occurrence)).unwrap();
    }
}

#[test]
fn interleaved_streams_match_serial_streams() {
    // Memorylessness: the same requests issued from two threads produce the
    // same responses as a serial pass.
    use std::sync::Arc;

    let backend = Arc::new(demo_backend());
    let request = |marker: &str, occurrence: u32| ChatRequest {
        model_id: "gpt-3.5-turbo".into(),
        system_text: "[he] primer".into(),
        user_text: format!("[he] {marker} Nuseirat"),
        temperature: 0.6,
        max_tokens: 1000,
        occurrence_index: occurrence,
    };
    let serial: Vec<ChatResponse> = (0..8)
        .map(|i| backend.complete(&request("q", i)).unwrap())
        .collect();

    let mut handles = Vec::new();
    for chunk in [(0u32..4), (4u32..8)] {
        let backend = Arc::clone(&backend);
        handles.push(std::thread::spawn(move || {
            chunk
                .map(|i| backend.complete(&request("q", i)).unwrap())
                .collect::<Vec<_>>()
        }));
    }
    let mut interleaved = Vec::new();
    for handle in handles {
        interleaved.extend(handle.join().unwrap());
    }
    assert_eq!(serial, interleaved);
}
