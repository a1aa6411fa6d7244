//! Command-line surface for the audit harness.
//!
//! Exit codes: 0 success, 1 usage error, 2 config error, 3 backend error,
//! 4 data/validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lingua_audit_core::backend::{BackendError, ReplayBackend};
use lingua_audit_core::config::{BackendConfig, ConfigError, RunConfig};
use lingua_audit_core::events::{
    filter_airstrikes, load_events, sample_events, write_events_file, ColumnMap, ConflictEvent,
    EventsError,
};
use lingua_audit_core::logfile::{read_records, validate, LogfileError};
use lingua_audit_core::pipeline::{resume_audit, run_audit, PipelineError, RunOutcome};
use lingua_audit_core::report::{
    build_report, code_logfile, emit_coding, emit_report, emit_stats_files, emit_wordfreq_files,
    worklist, AuditReport, ReportError, ReportSettings,
};

#[derive(Parser)]
#[command(
    name = "lingua-audit",
    version,
    about = "Cross-lingual audit harness for chat-model answers about conflict events"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ConfigOverrides {
    /// Sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of events to sample.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Repeats per (event, language) cell.
    #[arg(long)]
    repeats: Option<u32>,
    /// Sampling temperature for queries.
    #[arg(long)]
    query_temperature: Option<f64>,
    /// Maximum response tokens.
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Model identifier sent to the backend.
    #[arg(long)]
    model_id: Option<String>,
    /// Substring that marks airstrike rows in the source article.
    #[arg(long)]
    airstrike_pattern: Option<String>,
    /// Name of the audited dyad.
    #[arg(long)]
    dyad_name: Option<String>,
    /// Events table (CSV).
    #[arg(long)]
    events_file: Option<PathBuf>,
    /// Output directory for logfiles and reports.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Question template id.
    #[arg(long)]
    template_id: Option<String>,
    /// Primer id.
    #[arg(long)]
    primer_id: Option<String>,
    /// Top-k stems per word-frequency table.
    #[arg(long)]
    top_stems_k: Option<usize>,
}

impl ConfigOverrides {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.sample_size {
            config.sample_size = v;
        }
        if let Some(v) = self.repeats {
            config.repeats = v;
        }
        if let Some(v) = self.query_temperature {
            config.query_temperature = v;
        }
        if let Some(v) = self.max_tokens {
            config.max_tokens = v;
        }
        if let Some(v) = &self.model_id {
            config.model_id = v.clone();
        }
        if let Some(v) = &self.airstrike_pattern {
            config.airstrike_pattern = v.clone();
        }
        if let Some(v) = &self.dyad_name {
            config.dyad_name = v.clone();
        }
        if let Some(v) = &self.events_file {
            config.events_file = v.clone();
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
        if let Some(v) = &self.template_id {
            config.template_id = v.clone();
        }
        if let Some(v) = &self.primer_id {
            config.primer_id = v.clone();
        }
        if let Some(v) = self.top_stems_k {
            config.top_stems_k = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter, and sample events; write the event manifest.
    Ingest {
        #[arg(long)]
        config: PathBuf,
        /// Manifest destination (default: <output_dir>/events_manifest.csv).
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Execute the full query scheme and write the audit logfile.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Pre-sampled event manifest; skips filtering and sampling.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Logfile destination (default: <output_dir>/<dyad>_audit.jsonl).
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Complete a partial audit logfile.
    Resume {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        logfile: PathBuf,
        /// Pre-sampled event manifest; skips filtering and sampling.
        #[arg(long)]
        events: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Auto-code answers, apply overrides, and emit the coding worklist.
    Code {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        logfile: PathBuf,
        /// Manual override CSV.
        #[arg(long)]
        overrides_file: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Emit event statistics, aggregates, and the dyad bias tables.
    Stats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        logfile: PathBuf,
        #[arg(long)]
        overrides_file: Option<PathBuf>,
        /// Proceed even when unparsed trials remain.
        #[arg(long)]
        allow_unparsed: bool,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Emit word-frequency tables and the keyword report.
    Wordfreq {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        logfile: PathBuf,
        #[arg(long)]
        overrides_file: Option<PathBuf>,
        #[arg(long)]
        allow_unparsed: bool,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Assemble the full report (JSON plus every CSV table).
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        logfile: PathBuf,
        #[arg(long)]
        overrides_file: Option<PathBuf>,
        #[arg(long)]
        allow_unparsed: bool,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Schema-check an audit logfile.
    Validate {
        #[arg(long)]
        logfile: PathBuf,
        /// Check a foreign replication log instead of a native logfile.
        #[arg(long)]
        foreign: bool,
    },
    /// Re-run the scheme against a recorded exchange log and diff logfiles.
    ReplayVerify {
        #[arg(long)]
        config: PathBuf,
        /// The previously produced audit logfile to compare against.
        #[arg(long)]
        logfile: PathBuf,
        /// Recorded exchange log; defaults to the config's replay backend.
        #[arg(long)]
        record_log: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
}

/// Errors mapped to documented exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Backend(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Config(_) => 2,
            Self::Backend(_) => 3,
            Self::Data(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Config(m) | Self::Backend(m) | Self::Data(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::Backend(_) => Self::Backend(err.to_string()),
            _ => Self::Config(err.to_string()),
        }
    }
}

impl From<EventsError> for CliError {
    fn from(err: EventsError) -> Self {
        Self::Data(err.to_string())
    }
}

impl From<LogfileError> for CliError {
    fn from(err: LogfileError) -> Self {
        Self::Data(err.to_string())
    }
}

impl From<BackendError> for CliError {
    fn from(err: BackendError) -> Self {
        Self::Backend(err.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::InvalidPlan(_) | PipelineError::Prompt(_) => {
                Self::Config(err.to_string())
            }
            PipelineError::Logfile(_)
            | PipelineError::PlanMismatch { .. }
            | PipelineError::MissingRunMeta => Self::Data(err.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(err: ReportError) -> Self {
        Self::Data(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let kind = err.kind();
            let _ = err.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn load_config(path: &Path, overrides: &ConfigOverrides) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(path)?;
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

/// The ingest chain: load, filter by pattern, seeded sample.
fn ingest_events(config: &RunConfig) -> Result<Vec<ConflictEvent>, CliError> {
    let loaded = load_events(&config.events_file, &config.column_map)?;
    let filtered = filter_airstrikes(&loaded, &config.airstrike_pattern);
    Ok(sample_events(&filtered, config.sample_size, config.seed)?)
}

fn events_for_plan(
    config: &RunConfig,
    manifest: &Option<PathBuf>,
) -> Result<Vec<ConflictEvent>, CliError> {
    match manifest {
        Some(path) => Ok(load_events(path, &ColumnMap::default())?),
        None => ingest_events(config),
    }
}

fn default_logfile(config: &RunConfig) -> PathBuf {
    config
        .output_dir
        .join(format!("{}_audit.jsonl", config.dyad_name))
}

fn print_outcome(outcome: &RunOutcome) {
    println!(
        "wrote {} ({} trials, {} failures, {} requests, {}+{} tokens)",
        outcome.logfile.display(),
        outcome.trials,
        outcome.failures,
        outcome.requests,
        outcome.prompt_tokens,
        outcome.completion_tokens,
    );
}

fn assemble_report(
    config: &RunConfig,
    logfile: &Path,
    overrides_file: &Option<PathBuf>,
    allow_unparsed: bool,
) -> Result<AuditReport, CliError> {
    let records = read_records(logfile)?;
    let lexicons = config.coding_lexicons()?;
    let keyword_lexicon = config.keyword_lexicon()?;
    let stopwords = config.stopwords()?;
    let settings = ReportSettings {
        allow_unparsed,
        top_stems_k: config.top_stems_k,
    };
    Ok(build_report(
        &records,
        overrides_file.as_deref(),
        &lexicons,
        &keyword_lexicon,
        &stopwords,
        &settings,
    )?)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest {
            config,
            output,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let events = ingest_events(&config)?;
            let destination =
                output.unwrap_or_else(|| config.output_dir.join("events_manifest.csv"));
            if let Some(parent) = destination.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Data(format!("cannot create output dir: {e}")))?;
            }
            write_events_file(&events, &destination)?;
            println!(
                "wrote {} ({} events sampled with seed {})",
                destination.display(),
                events.len(),
                config.seed
            );
            Ok(())
        }
        Command::Run {
            config,
            events,
            output,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let plan_events = events_for_plan(&config, &events)?;
            let plan = config.plan(plan_events)?;
            let backend = config.build_backend()?;
            let out = output.unwrap_or_else(|| default_logfile(&config));
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Data(format!("cannot create output dir: {e}")))?;
            }
            let outcome = run_audit(&plan, backend.as_ref(), &out)?;
            print_outcome(&outcome);
            Ok(())
        }
        Command::Resume {
            config,
            logfile,
            events,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let plan_events = events_for_plan(&config, &events)?;
            let plan = config.plan(plan_events)?;
            let backend = config.build_backend()?;
            let outcome = resume_audit(&logfile, &plan, backend.as_ref())?;
            print_outcome(&outcome);
            Ok(())
        }
        Command::Code {
            config,
            logfile,
            overrides_file,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let records = read_records(&logfile)?;
            let lexicons = config.coding_lexicons()?;
            let coded = code_logfile(&records, &lexicons, overrides_file.as_deref())?;
            let work = worklist(&records, &coded);
            let written = emit_coding(&coded, &work, &config.output_dir)?;
            for path in &written {
                println!("wrote {}", path.display());
            }
            println!(
                "coded {} trials ({} unparsed on the worklist)",
                coded.len(),
                work.len()
            );
            Ok(())
        }
        Command::Stats {
            config,
            logfile,
            overrides_file,
            allow_unparsed,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let report = assemble_report(&config, &logfile, &overrides_file, allow_unparsed)?;
            for path in emit_stats_files(&report, &config.output_dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Wordfreq {
            config,
            logfile,
            overrides_file,
            allow_unparsed,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let report = assemble_report(&config, &logfile, &overrides_file, allow_unparsed)?;
            for path in emit_wordfreq_files(&report, &config.output_dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Report {
            config,
            logfile,
            overrides_file,
            allow_unparsed,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let report = assemble_report(&config, &logfile, &overrides_file, allow_unparsed)?;
            for path in emit_report(&report, &config.output_dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Validate { logfile, foreign } => {
            if foreign {
                return validate_foreign(&logfile);
            }
            let summary = validate(&logfile)?;
            println!(
                "valid: {} records ({} trials, {} failures, {} primer translations, {} question translations)",
                summary.records,
                summary.trials,
                summary.failures,
                summary.primer_translations,
                summary.question_translations,
            );
            Ok(())
        }
        Command::ReplayVerify {
            config,
            logfile,
            record_log,
            events,
            overrides,
        } => {
            let config = load_config(&config, &overrides)?;
            let record_log = match (record_log, &config.backend) {
                (Some(path), _) => path,
                (None, BackendConfig::Replay { log }) => log.clone(),
                (None, _) => {
                    return Err(CliError::Usage(
                        "replay-verify needs --record-log or a replay backend in the config".into(),
                    ))
                }
            };
            let backend = ReplayBackend::from_path(&record_log)?;
            let plan_events = events_for_plan(&config, &events)?;
            let plan = config.plan(plan_events)?;
            let dir = tempfile_dir(&config)?;
            let rerun = dir.join("replay_verify.jsonl");
            run_audit(&plan, &backend, &rerun)?;
            let expected = std::fs::read(&logfile)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", logfile.display())))?;
            let actual = std::fs::read(&rerun)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", rerun.display())))?;
            if expected == actual {
                println!("replay verified: logfiles are byte-identical");
                Ok(())
            } else {
                let line = first_differing_line(&expected, &actual);
                Err(CliError::Data(format!(
                    "replay mismatch: logfiles differ at line {line} (re-run kept at {})",
                    rerun.display()
                )))
            }
        }
    }
}

fn tempfile_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = config.output_dir.join("replay_verify");
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn first_differing_line(a: &[u8], b: &[u8]) -> usize {
    let mut line = 1;
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return line;
        }
        if *x == b'\n' {
            line += 1;
        }
    }
    line
}

/// Foreign replication logs: JSON Lines where each object carries at least
/// string fields `language`, `question`, and `answer`. Anything else is
/// rejected with the offending line.
fn validate_foreign(path: &Path) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut recognized = 0usize;
    for (index, line) in raw.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| {
            CliError::Data(format!("foreign log line {line_no}: invalid JSON: {e}"))
        })?;
        let object = value.as_object().ok_or_else(|| {
            CliError::Data(format!("foreign log line {line_no}: not a JSON object"))
        })?;
        for field in ["language", "question", "answer"] {
            if !object.get(field).map(|v| v.is_string()).unwrap_or(false) {
                return Err(CliError::Data(format!(
                    "foreign log line {line_no}: unrecognized layout (expected string field '{field}'); \
                     see the README for the supported foreign layout"
                )));
            }
        }
        recognized += 1;
    }
    if recognized == 0 {
        return Err(CliError::Data(
            "foreign log contains no records".to_string(),
        ));
    }
    println!("foreign log recognized: {recognized} records");
    Ok(())
}
