//! Coding is a total, deterministic function of the answer text: arbitrary
//! input never panics, the classification/count invariant always holds, and
//! repeated calls agree.

use lingua_audit_core::coding::{auto_code, classify, extract_counts, CodingLexicons, TrialKey};
use lingua_audit_core::lang::LanguageCode;
use proptest::prelude::*;

fn key() -> TrialKey {
    TrialKey {
        event_id: "E1".into(),
        language: LanguageCode::new("he"),
        repeat_index: 0,
    }
}

proptest! {
    #[test]
    fn auto_code_is_total_and_consistent(text in "\\PC{0,200}") {
        let lexicons = CodingLexicons::default();
        let coded = auto_code(key(), &text, &lexicons);
        prop_assert!(coded.counts_consistent());
        prop_assert_eq!(auto_code(key(), &text, &lexicons), coded);
    }

    #[test]
    fn auto_code_handles_casualty_flavored_noise(
        text in "(no|between|killed|injured|[0-9]{1,4}|twenty|three|and|to|civilians|children|august|\\.|,| ){0,40}",
    ) {
        let lexicons = CodingLexicons::default();
        let coded = auto_code(key(), &text, &lexicons);
        prop_assert!(coded.counts_consistent());
        for value in [coded.fatalities_total, coded.civilians, coded.injured, coded.children]
            .into_iter()
            .flatten()
        {
            prop_assert!(value >= 0.0 && value.is_finite());
        }
    }

    #[test]
    fn classify_and_extract_agree_on_the_invariant(text in "\\PC{0,120}") {
        let lexicons = CodingLexicons::default();
        let classification = classify(&text, &lexicons);
        if classification == lingua_audit_core::coding::Classification::Numeric {
            // Either extraction yields a fatality total or a conflict, never
            // a silent empty result.
            if let Ok(counts) = extract_counts(&text, &lexicons) {
                prop_assert!(counts.fatalities_total.is_some());
            }
        }
    }
}
