//! Run configuration: a single JSON document.
//!
//! Relative paths inside the config resolve against the config file's
//! directory, so runs behave the same from any working directory. The API
//! credential is never part of the config; the live backend reads it from
//! the `LINGUA_AUDIT_API_KEY` environment variable only.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    ChatBackend, LiveBackend, LiveSettings, RecordingBackend, ReplayBackend, ScriptedBackend,
};
use crate::coding::{CodingLexicons, PhraseList};
use crate::events::{ColumnMap, ConflictEvent};
use crate::lang::{LanguageRole, LanguageSlot};
use crate::pipeline::AuditPlan;
use crate::prompts::{builtin_primers, builtin_templates, Primer, QuestionTemplate};
use crate::textstats::{KeywordLexicon, StopwordList};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config '{path}': {message}")]
    Read { path: String, message: String },
    #[error("cannot parse config '{path}': {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown template id '{0}'")]
    UnknownTemplate(String),
    #[error("unknown primer id '{0}'")]
    UnknownPrimer(String),
    #[error("cannot load lexicon: {0}")]
    Lexicon(String),
    #[error("cannot set up backend: {0}")]
    Backend(String),
}

/// Which backend a run talks to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Live {
        #[serde(default, flatten)]
        settings: LiveSettings,
    },
    Replay {
        log: PathBuf,
    },
    Scripted {
        script: PathBuf,
    },
}

/// Optional per-file lexicon overrides; unset fields use the shipped
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    pub denial: Option<PathBuf>,
    pub other_event: Option<PathBuf>,
    pub nonexact: Option<PathBuf>,
    pub zero: Option<PathBuf>,
    pub fatality_cues: Option<PathBuf>,
    pub injured_cues: Option<PathBuf>,
    pub civilian_cues: Option<PathBuf>,
    pub children_cues: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub id: String,
    pub pattern: String,
    pub purpose: crate::prompts::TemplatePurpose,
}

fn default_pattern() -> String {
    "airstrike".into()
}
fn default_sample_size() -> usize {
    10
}
fn default_template_id() -> String {
    "fatality_count".into()
}
fn default_primer_id() -> String {
    "military_historian".into()
}
fn default_repeats() -> u32 {
    10
}
fn default_query_temperature() -> f64 {
    0.6
}
fn default_max_tokens() -> u32 {
    1000
}
fn default_model_id() -> String {
    "gpt-3.5-turbo".into()
}
fn default_top_stems() -> usize {
    15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dyad_name: String,
    pub events_file: PathBuf,
    #[serde(default)]
    pub column_map: ColumnMap,
    #[serde(default = "default_pattern")]
    pub airstrike_pattern: String,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    pub seed: u64,
    pub languages: Vec<LanguageSlot>,
    #[serde(default = "default_template_id")]
    pub template_id: String,
    #[serde(default = "default_primer_id")]
    pub primer_id: String,
    #[serde(default)]
    pub custom_templates: Vec<TemplateSpec>,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default = "default_query_temperature")]
    pub query_temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_model_id")]
    pub model_id: String,
    pub backend: BackendConfig,
    /// When set, every exchange is also appended to this log.
    #[serde(default)]
    pub record_log: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub lexicons: LexiconPaths,
    #[serde(default = "default_top_stems")]
    pub top_stems_k: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut config: Self = serde_json::from_str(&raw).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.events_file);
        resolve(&mut self.output_dir);
        if let Some(p) = self.record_log.as_mut() {
            resolve(p);
        }
        match &mut self.backend {
            BackendConfig::Replay { log } => resolve(log),
            BackendConfig::Scripted { script } => resolve(script),
            BackendConfig::Live { .. } => {}
        }
        for p in [
            &mut self.lexicons.denial,
            &mut self.lexicons.other_event,
            &mut self.lexicons.nonexact,
            &mut self.lexicons.zero,
            &mut self.lexicons.fatality_cues,
            &mut self.lexicons.injured_cues,
            &mut self.lexicons.civilian_cues,
            &mut self.lexicons.children_cues,
            &mut self.lexicons.keywords,
            &mut self.lexicons.stopwords,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.dyad_name.trim().is_empty() {
            return invalid("dyad_name must not be empty".into());
        }
        if self.airstrike_pattern.is_empty() {
            return invalid("airstrike_pattern must not be empty".into());
        }
        if self.sample_size == 0 {
            return invalid("sample_size must be at least 1".into());
        }
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
        if self.top_stems_k == 0 {
            return invalid("top_stems_k must be at least 1".into());
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
        self.template()?;
        self.primer()?;
        Ok(())
    }

    /// Custom templates shadow builtin ids.
    pub fn template(&self) -> Result<QuestionTemplate, ConfigError> {
        if let Some(spec) = self
            .custom_templates
            .iter()
            .find(|t| t.id == self.template_id)
        {
            return Ok(QuestionTemplate {
                id: spec.id.clone(),
                pattern: spec.pattern.clone(),
                purpose: spec.purpose,
            });
        }
        builtin_templates()
            .into_iter()
            .find(|t| t.id == self.template_id)
            .ok_or_else(|| ConfigError::UnknownTemplate(self.template_id.clone()))
    }

    pub fn primer(&self) -> Result<Primer, ConfigError> {
        builtin_primers()
            .into_iter()
            .find(|p| p.id == self.primer_id)
            .ok_or_else(|| ConfigError::UnknownPrimer(self.primer_id.clone()))
    }

    pub fn attacker_language(&self) -> &LanguageSlot {
        self.languages
            .iter()
            .find(|l| l.role == LanguageRole::AttackerLanguage)
            .expect("validated: exactly one attacker language")
    }

    pub fn target_language(&self) -> &LanguageSlot {
        self.languages
            .iter()
            .find(|l| l.role == LanguageRole::TargetLanguage)
            .expect("validated: exactly one target language")
    }

    pub fn plan(&self, events: Vec<ConflictEvent>) -> Result<AuditPlan, ConfigError> {
        Ok(AuditPlan {
            dyad_name: self.dyad_name.clone(),
            events,
            languages: self.languages.clone(),
            template: self.template()?,
            primer: self.primer()?,
            repeats: self.repeats,
            query_temperature: self.query_temperature,
            seed: self.seed,
            model_id: self.model_id.clone(),
            max_tokens: self.max_tokens,
        })
    }

    /// Builds the configured backend, wrapped in a recorder when
    /// `record_log` is set.
    pub fn build_backend(&self) -> Result<Box<dyn ChatBackend>, ConfigError> {
        let inner: Box<dyn ChatBackend> = match &self.backend {
            BackendConfig::Live { settings } => Box::new(
                LiveBackend::from_env(settings.clone())
                    .map_err(|e| ConfigError::Backend(e.to_string()))?,
            ),
            BackendConfig::Replay { log } => Box::new(
                ReplayBackend::from_path(log).map_err(|e| ConfigError::Backend(e.to_string()))?,
            ),
            BackendConfig::Scripted { script } => Box::new(
                ScriptedBackend::from_path(script)
                    .map_err(|e| ConfigError::Backend(e.to_string()))?,
            ),
        };
        match &self.record_log {
            Some(sink) => Ok(Box::new(
                RecordingBackend::create(inner, sink)
                    .map_err(|e| ConfigError::Backend(e.to_string()))?,
            )),
            None => Ok(inner),
        }
    }

    pub fn coding_lexicons(&self) -> Result<CodingLexicons, ConfigError> {
        let mut lexicons = CodingLexicons::default();
        let load = |path: &Option<PathBuf>| -> Result<Option<PhraseList>, ConfigError> {
            match path {
                Some(p) => PhraseList::from_path(p)
                    .map(Some)
                    .map_err(|e| ConfigError::Lexicon(e.to_string())),
                None => Ok(None),
            }
        };
        if let Some(list) = load(&self.lexicons.denial)? {
            lexicons.denial = list;
        }
        if let Some(list) = load(&self.lexicons.other_event)? {
            lexicons.other_event = list;
        }
        if let Some(list) = load(&self.lexicons.nonexact)? {
            lexicons.nonexact = list;
        }
        if let Some(list) = load(&self.lexicons.zero)? {
            lexicons.zero = list;
        }
        if let Some(list) = load(&self.lexicons.fatality_cues)? {
            lexicons.fatality_cues = list;
        }
        if let Some(list) = load(&self.lexicons.injured_cues)? {
            lexicons.injured_cues = list;
        }
        if let Some(list) = load(&self.lexicons.civilian_cues)? {
            lexicons.civilian_cues = list;
        }
        if let Some(list) = load(&self.lexicons.children_cues)? {
            lexicons.children_cues = list;
        }
        Ok(lexicons)
    }

    pub fn keyword_lexicon(&self) -> Result<KeywordLexicon, ConfigError> {
        match &self.lexicons.keywords {
            Some(path) => {
                KeywordLexicon::from_path(path).map_err(|e| ConfigError::Lexicon(e.to_string()))
            }
            None => Ok(KeywordLexicon::default()),
        }
    }

    pub fn stopwords(&self) -> Result<StopwordList, ConfigError> {
        match &self.lexicons.stopwords {
            Some(path) => {
                StopwordList::from_path(path).map_err(|e| ConfigError::Lexicon(e.to_string()))
            }
            None => Ok(StopwordList::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn minimal_config_json() -> String {
        r#"{
            "dyad_name": "demo",
            "events_file": "events.csv",
            "seed": 7,
            "languages": [
                {"code": "he", "role": "attacker_language"},
                {"code": "ar", "role": "target_language"}
            ],
            "backend": {"kind": "scripted", "script": "script.json"},
            "output_dir": "out"
        }"#
        .to_string()
    }

    #[test]
    fn defaults_match_the_documented_settings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(minimal_config_json().as_bytes()).unwrap();
        let config = RunConfig::load(&path).unwrap();
        assert_eq!(config.repeats, 10);
        assert_eq!(config.query_temperature, 0.6);
        assert_eq!(config.max_tokens, 1000);
        assert_eq!(config.sample_size, 10);
        assert_eq!(config.model_id, "gpt-3.5-turbo");
        assert_eq!(config.airstrike_pattern, "airstrike");
        assert_eq!(config.template_id, "fatality_count");
        assert_eq!(config.top_stems_k, 15);
    }

    #[test]
    fn relative_paths_resolve_against_the_config_directory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, minimal_config_json()).unwrap();
        let config = RunConfig::load(&path).unwrap();
        assert_eq!(config.events_file, dir.path().join("events.csv"));
        assert_eq!(config.output_dir, dir.path().join("out"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let json = minimal_config_json().replace("\"seed\": 7", "\"seed\": 7, \"api_key\": \"x\"");
        std::fs::write(&path, json).unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "{err}");
    }

    #[test]
    fn bad_language_roles_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let json = minimal_config_json().replace("target_language", "attacker_language");
        std::fs::write(&path, json).unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert!(err.to_string().contains("attacker_language"), "{err}");
    }

    #[test]
    fn custom_templates_shadow_builtins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let json = minimal_config_json().replace(
            "\"seed\": 7",
            r#""seed": 7,
            "template_id": "short",
            "custom_templates": [{"id": "short", "pattern": "casualties of {attacker} strike on {date} in {location}?", "purpose": "fatality_count"}]"#,
        );
        std::fs::write(&path, json).unwrap();
        let config = RunConfig::load(&path).unwrap();
        assert!(config.template().unwrap().pattern.starts_with("casualties"));
    }
}
