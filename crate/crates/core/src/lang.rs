//! Language codes and dyad roles.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The language questions are authored in and answers are coded in.
pub const PIVOT_LANGUAGE: &str = "en";

/// Lowercase language code (ISO-639-ish, e.g. "he", "ar", "tr", "ku").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Self {
        Self(code.into().to_lowercase())
    }

    pub fn pivot() -> Self {
        Self::new(PIVOT_LANGUAGE)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_pivot(&self) -> bool {
        self.0 == PIVOT_LANGUAGE
    }

    /// English display name used in translation instructions. Unknown codes
    /// fall back to the code itself.
    pub fn display_name(&self) -> &str {
        match self.0.as_str() {
            "en" => "English",
            "he" => "Hebrew",
            "ar" => "Arabic",
            "tr" => "Turkish",
            "ku" | "kmr" => "Northern Kurdish (Kurmanji)",
            "fr" => "French",
            "de" => "German",
            "es" => "Spanish",
            "ru" => "Russian",
            _ => &self.0,
        }
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LanguageCode {
    fn from(code: &str) -> Self {
        Self::new(code)
    }
}

/// Which side of the dyad a language belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageRole {
    AttackerLanguage,
    TargetLanguage,
}

impl fmt::Display for LanguageRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AttackerLanguage => f.write_str("attacker_language"),
            Self::TargetLanguage => f.write_str("target_language"),
        }
    }
}

/// A language with its dyad role, as configured for a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSlot {
    pub code: LanguageCode,
    pub role: LanguageRole,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_normalized_lowercase() {
        assert_eq!(LanguageCode::new("HE").as_str(), "he");
    }

    #[test]
    fn pivot_detection() {
        assert!(LanguageCode::new("en").is_pivot());
        assert!(!LanguageCode::new("ar").is_pivot());
    }

    #[test]
    fn unknown_code_falls_back_to_itself() {
        assert_eq!(LanguageCode::new("xx").display_name(), "xx");
    }
}
