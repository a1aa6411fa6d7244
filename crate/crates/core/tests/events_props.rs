//! Property tests for event filtering, sampling, and the CSV round trip.

use chrono::NaiveDate;
use lingua_audit_core::events::{
    filter_airstrikes, load_events, sample_events, write_events_csv, ColumnMap, ConflictEvent,
};
use proptest::prelude::*;
use std::collections::HashSet;
use std::io::Write;

prop_compose! {
    fn arb_event(index: usize)(
        article in "[ a-zA-Z0-9.,'\"\n-]{0,60}",
        location in "[ a-zA-Z'-]{1,30}",
        day in 1u32..28,
        lat in -90.0f64..90.0,
        lon in -180.0f64..180.0,
        best in prop::option::of(0u32..500),
    ) -> ConflictEvent {
        ConflictEvent {
            event_id: format!("E{index:03}"),
            conflict_name: "demo".into(),
            attacker_label: "Israeli".into(),
            event_date: NaiveDate::from_ymd_opt(2014, 8, day).unwrap(),
            location_name: location.trim().to_string(),
            latitude: lat,
            longitude: lon,
            source_article: article,
            reference_fatalities: best,
        }
    }
}

fn arb_events(max: usize) -> impl Strategy<Value = Vec<ConflictEvent>> {
    prop::collection::vec(any::<u8>(), 1..max).prop_flat_map(|seeds| {
        seeds
            .into_iter()
            .enumerate()
            .map(|(i, _)| arb_event(i))
            .collect::<Vec<_>>()
    })
}

proptest! {
    #[test]
    fn filter_is_idempotent(events in arb_events(20), pattern in "[a-z]{1,6}") {
        let once = filter_airstrikes(&events, &pattern);
        let twice = filter_airstrikes(&once, &pattern);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn sample_is_a_distinct_subset_of_exact_size(
        events in arb_events(25),
        seed in any::<u64>(),
    ) {
        let n = events.len() / 2;
        let sample = sample_events(&events, n, seed).unwrap();
        prop_assert_eq!(sample.len(), n);
        let ids: HashSet<&str> = sample.iter().map(|e| e.event_id.as_str()).collect();
        prop_assert_eq!(ids.len(), n);
        for event in &sample {
            prop_assert!(events.contains(event));
        }
        // Chronological output order.
        for pair in sample.windows(2) {
            prop_assert!(pair[0].sort_key() <= pair[1].sort_key());
        }
        // Same seed, same sample.
        prop_assert_eq!(sample, sample_events(&events, n, seed).unwrap());
    }

    #[test]
    fn csv_round_trip_is_identity(events in arb_events(12)) {
        let mut buf = Vec::new();
        write_events_csv(&events, &mut buf).unwrap();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(&buf).unwrap();
        file.flush().unwrap();
        let reloaded = load_events(file.path(), &ColumnMap::default()).unwrap();
        prop_assert_eq!(events, reloaded);
    }
}
