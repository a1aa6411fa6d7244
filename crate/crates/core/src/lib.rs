//! Cross-lingual audit harness for chat-model answers about conflict events.
//!
//! The harness asks the same conflict-event questions in several languages
//! through a chat-completion backend, codes the back-translated answers, and
//! quantifies language-dependent discrepancies in reported casualty figures
//! and word usage.
//!
//! Module map:
//! - [`events`] — GED-style CSV ingestion, airstrike filtering, seeded sampling
//! - [`prompts`] — primers, question templates, question rendering
//! - [`backend`] — chat backends (live / replay / scripted) with record/replay
//! - [`pipeline`] — the per-(event, language) query scheme and audit logfile
//! - [`coding`] — answer classification and casualty-count extraction
//! - [`stats`] — per-cell statistics and dyad bias (generic over [`scalar::Scalar`])
//! - [`textstats`] — word frequencies, stemming, keyword ratios
//! - [`config`] / [`report`] — run configuration and report emission

pub mod backend;
pub mod coding;
pub mod config;
pub mod events;
pub mod lang;
pub mod logfile;
pub mod pipeline;
pub mod prompts;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod textstats;

/// The scalar type concrete pipelines run on.
pub type Real = f64;

/// [`stats::EventLanguageStats`] at the default scalar.
pub type EventLanguageStats = stats::EventLanguageStats<Real>;
/// [`stats::LanguageAggregate`] at the default scalar.
pub type LanguageAggregate = stats::LanguageAggregate<Real>;
/// [`stats::DyadBiasSummary`] at the default scalar.
pub type DyadBiasSummary = stats::DyadBiasSummary<Real>;
/// [`textstats::WordFrequencyTable`] at the default scalar.
pub type WordFrequencyTable = textstats::WordFrequencyTable<Real>;
/// [`textstats::KeywordReport`] at the default scalar.
pub type KeywordReport = textstats::KeywordReport<Real>;

pub use backend::{ChatBackend, ChatRequest, ChatResponse, RequestKey};
pub use events::ConflictEvent;
pub use lang::{LanguageCode, LanguageRole, LanguageSlot};
pub use pipeline::{resume_audit, run_audit, AuditPlan, RunOutcome};
