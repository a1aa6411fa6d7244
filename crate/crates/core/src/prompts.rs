//! Primers and question templates, plus event-specific rendering.
//!
//! Templates are authored in the pivot language (English) and translated
//! downstream; per-language hand-written prompts are deliberately not a
//! concept here.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::ConflictEvent;

/// System message fixing the model's role before a query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Primer {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplatePurpose {
    FatalityCount,
    Context,
}

/// Question pattern with `{attacker}`, `{date}`, and `{location}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub id: String,
    pub pattern: String,
    pub purpose: TemplatePurpose,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("unknown placeholder '{{{name}}}' in template '{template}'")]
    UnknownPlaceholder { template: String, name: String },
    #[error("unbalanced '{{' in template '{template}'")]
    UnbalancedBrace { template: String },
}

pub const PRIMER_MILITARY_HISTORIAN: &str = "You are an expert of quantitative military history.";
pub const PRIMER_TRANSLATOR: &str = "You are a professional translator.";
pub const PRIMER_HELPFUL_ADVISOR: &str = "You are a helpful advisor.";

/// The built-in primers and question templates.
pub fn builtin_catalog() -> (Vec<Primer>, Vec<QuestionTemplate>) {
    (builtin_primers(), builtin_templates())
}

pub fn builtin_primers() -> Vec<Primer> {
    vec![
        Primer {
            id: "military_historian".into(),
            text: PRIMER_MILITARY_HISTORIAN.into(),
        },
        Primer {
            id: "translator".into(),
            text: PRIMER_TRANSLATOR.into(),
        },
        Primer {
            id: "helpful_advisor".into(),
            text: PRIMER_HELPFUL_ADVISOR.into(),
        },
    ]
}

pub fn builtin_templates() -> Vec<QuestionTemplate> {
    vec![
        QuestionTemplate {
            id: "fatality_count".into(),
            pattern: "In the {attacker} airstrike on {date} in {location} how many were killed?"
                .into(),
            purpose: TemplatePurpose::FatalityCount,
        },
        QuestionTemplate {
            id: "context".into(),
            pattern: "what happened in the {attacker} airstrike on {date} in {location}?".into(),
            purpose: TemplatePurpose::Context,
        },
    ]
}

/// Formats a date as "MonthName D, YYYY" in the pivot language, no zero
/// padding on the day ("August 8, 2015").
pub fn format_event_date(date: NaiveDate) -> String {
    const MONTHS: [&str; 12] = [
        "January",
        "February",
        "March",
        "April",
        "May",
        "June",
        "July",
        "August",
        "September",
        "October",
        "November",
        "December",
    ];
    format!(
        "{} {}, {}",
        MONTHS[date.month0() as usize],
        date.day(),
        date.year()
    )
}

/// Substitutes every placeholder in the template with the event's fields.
/// Deterministic and total on valid inputs; the output contains no braces.
pub fn render_question(
    template: &QuestionTemplate,
    event: &ConflictEvent,
) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.pattern.len() + 32);
    let mut chars = template.pattern.chars();
    while let Some(c) = chars.next() {
        if c != '{' {
            out.push(c);
            continue;
        }
        let mut name = String::new();
        loop {
            match chars.next() {
                Some('}') => break,
                Some(c) => name.push(c),
                None => {
                    return Err(PromptError::UnbalancedBrace {
                        template: template.id.clone(),
                    })
                }
            }
        }
        match name.as_str() {
            "attacker" => out.push_str(&event.attacker_label),
            "date" => out.push_str(&format_event_date(event.event_date)),
            "location" => out.push_str(&event.location_name),
            _ => {
                return Err(PromptError::UnknownPlaceholder {
                    template: template.id.clone(),
                    name,
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(attacker: &str, date: &str, location: &str) -> ConflictEvent {
        ConflictEvent {
            event_id: "E1".into(),
            conflict_name: "demo".into(),
            attacker_label: attacker.into(),
            event_date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            location_name: location.into(),
            latitude: 0.0,
            longitude: 0.0,
            source_article: String::new(),
            reference_fatalities: None,
        }
    }

    fn fatality_template() -> QuestionTemplate {
        builtin_templates()
            .into_iter()
            .find(|t| t.id == "fatality_count")
            .unwrap()
    }

    #[test]
    fn renders_the_gaza_example() {
        let q = render_question(
            &fatality_template(),
            &event("Israeli", "2014-08-21", "the Nuseirat refugee camp"),
        )
        .unwrap();
        assert_eq!(
            q,
            "In the Israeli airstrike on August 21, 2014 in the Nuseirat refugee camp how many were killed?"
        );
    }

    #[test]
    fn renders_the_midyat_example_without_day_padding() {
        let q = render_question(
            &fatality_template(),
            &event("Turkish", "2015-08-08", "Midyat"),
        )
        .unwrap();
        assert_eq!(
            q,
            "In the Turkish airstrike on August 8, 2015 in Midyat how many were killed?"
        );
    }

    #[test]
    fn pattern_without_placeholders_is_returned_verbatim() {
        let t = QuestionTemplate {
            id: "fixed".into(),
            pattern: "how many were killed?".into(),
            purpose: TemplatePurpose::FatalityCount,
        };
        let q = render_question(&t, &event("Israeli", "2014-08-21", "Rafah")).unwrap();
        assert_eq!(q, "how many were killed?");
    }

    #[test]
    fn unknown_placeholder_is_an_error() {
        let t = QuestionTemplate {
            id: "bad".into(),
            pattern: "what about {weather}?".into(),
            purpose: TemplatePurpose::Context,
        };
        let err = render_question(&t, &event("Israeli", "2014-08-21", "Rafah")).unwrap_err();
        assert_eq!(
            err,
            PromptError::UnknownPlaceholder {
                template: "bad".into(),
                name: "weather".into()
            }
        );
    }

    #[test]
    fn rendered_text_contains_no_braces() {
        for template in builtin_templates() {
            let q = render_question(&template, &event("Turkish", "2015-08-08", "Midyat")).unwrap();
            assert!(!q.contains('{') && !q.contains('}'));
        }
    }

    #[test]
    fn catalog_carries_the_three_primers_and_two_templates() {
        let (primers, templates) = builtin_catalog();
        let texts: Vec<_> = primers.iter().map(|p| p.text.as_str()).collect();
        assert!(texts.contains(&"You are an expert of quantitative military history."));
        assert!(texts.contains(&"You are a professional translator."));
        assert!(texts.contains(&"You are a helpful advisor."));
        assert_eq!(templates.len(), 2);
        assert!(templates
            .iter()
            .any(|t| t.purpose == TemplatePurpose::Context
                && t.pattern.starts_with("what happened in the")));
    }
}
