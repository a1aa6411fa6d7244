//! Conflict-event ingestion, filtering, and seeded sampling.
//!
//! Events come from a GED-style CSV table (RFC 4180, UTF-8, header row
//! required). A [`ColumnMap`] names the source column for each field, so
//! tables with arbitrary headers can be loaded without rewriting them.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

/// One geocoded airstrike row; the unit of questioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictEvent {
    pub event_id: String,
    pub conflict_name: String,
    /// Attacker adjective as used in question text, e.g. "Israeli".
    pub attacker_label: String,
    pub event_date: NaiveDate,
    pub location_name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub source_article: String,
    /// The dataset's own best fatality estimate, carried for reports only.
    pub reference_fatalities: Option<u32>,
}

impl ConflictEvent {
    /// Canonical ordering key: chronological, then by id.
    pub fn sort_key(&self) -> (NaiveDate, &str) {
        (self.event_date, &self.event_id)
    }
}

/// Maps each [`ConflictEvent`] field to a source column name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub event_id: String,
    pub conflict_name: String,
    pub attacker_label: String,
    pub event_date: String,
    pub location_name: String,
    pub latitude: String,
    pub longitude: String,
    pub source_article: String,
    pub reference_fatalities: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            event_id: "event_id".into(),
            conflict_name: "conflict_name".into(),
            attacker_label: "attacker_label".into(),
            event_date: "event_date".into(),
            location_name: "location_name".into(),
            latitude: "latitude".into(),
            longitude: "longitude".into(),
            source_article: "source_article".into(),
            reference_fatalities: "reference_fatalities".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum EventsError {
    #[error("cannot read events file '{path}': {message}")]
    Read { path: String, message: String },
    #[error("events file '{path}' is missing mapped column '{column}'")]
    MissingColumn { path: String, column: String },
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("row {row}: duplicate event_id '{event_id}'")]
    DuplicateId { row: u64, event_id: String },
    #[error("cannot sample {requested} events from a population of {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("cannot write events file '{path}': {message}")]
    Write { path: String, message: String },
}

/// Loads one [`ConflictEvent`] per data row, in file order.
///
/// Rows are numbered by file line, header included, so "row 2" is the first
/// data row. The `reference_fatalities` column is optional: when absent from
/// the header the field is `None` for every event.
pub fn load_events(path: &Path, columns: &ColumnMap) -> Result<Vec<ConflictEvent>, EventsError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| EventsError::Read {
            path: display.clone(),
            message: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| EventsError::Read {
            path: display.clone(),
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| EventsError::MissingColumn {
            path: display.clone(),
            column: name.to_string(),
        })
    };

    let idx_id = require(&columns.event_id)?;
    let idx_conflict = require(&columns.conflict_name)?;
    let idx_attacker = require(&columns.attacker_label)?;
    let idx_date = require(&columns.event_date)?;
    let idx_location = require(&columns.location_name)?;
    let idx_lat = require(&columns.latitude)?;
    let idx_lon = require(&columns.longitude)?;
    let idx_article = require(&columns.source_article)?;
    let idx_reference = find(&columns.reference_fatalities);

    let mut events = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for result in reader.records() {
        let record = result.map_err(|e| EventsError::Read {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        // Text payloads are kept verbatim (round-trip identity); only fields
        // that get parsed tolerate surrounding whitespace.
        let raw = |idx: usize| record.get(idx).unwrap_or("");
        let field = |idx: usize| raw(idx).trim();

        let event_id = raw(idx_id).to_string();
        if event_id.trim().is_empty() {
            return Err(EventsError::Row {
                row,
                message: "empty event_id".into(),
            });
        }
        if !seen_ids.insert(event_id.clone()) {
            return Err(EventsError::DuplicateId { row, event_id });
        }

        let event_date = parse_event_date(field(idx_date))
            .map_err(|message| EventsError::Row { row, message })?;
        let latitude = parse_coordinate(field(idx_lat), "latitude", 90.0)
            .map_err(|message| EventsError::Row { row, message })?;
        let longitude = parse_coordinate(field(idx_lon), "longitude", 180.0)
            .map_err(|message| EventsError::Row { row, message })?;

        let reference_fatalities = match idx_reference {
            Some(idx) => {
                let raw = field(idx);
                if raw.is_empty() {
                    None
                } else {
                    Some(raw.parse::<u32>().map_err(|_| EventsError::Row {
                        row,
                        message: format!("unparsable reference_fatalities '{raw}'"),
                    })?)
                }
            }
            None => None,
        };

        events.push(ConflictEvent {
            event_id,
            conflict_name: raw(idx_conflict).to_string(),
            attacker_label: raw(idx_attacker).to_string(),
            event_date,
            location_name: raw(idx_location).to_string(),
            latitude,
            longitude,
            source_article: raw(idx_article).to_string(),
            reference_fatalities,
        });
    }
    Ok(events)
}

/// Dates are ISO-8601 internally; a trailing time component ("2014-08-21
/// 00:00:00" or "...T00:00:00") is tolerated and dropped.
fn parse_event_date(raw: &str) -> Result<NaiveDate, String> {
    let date_part = raw.split([' ', 'T']).next().unwrap_or_default();
    NaiveDate::parse_from_str(date_part, "%Y-%m-%d").map_err(|_| format!("unparsable date '{raw}'"))
}

fn parse_coordinate(raw: &str, name: &str, bound: f64) -> Result<f64, String> {
    let value: f64 = raw
        .parse()
        .map_err(|_| format!("unparsable {name} '{raw}'"))?;
    if !value.is_finite() || value.abs() > bound {
        return Err(format!("{name} {value} outside [-{bound}, {bound}]"));
    }
    Ok(value)
}

/// Keeps events whose source article contains `pattern`, case-insensitively.
/// Order is preserved; the call is idempotent.
pub fn filter_airstrikes(events: &[ConflictEvent], pattern: &str) -> Vec<ConflictEvent> {
    let needle = pattern.to_lowercase();
    events
        .iter()
        .filter(|e| e.source_article.to_lowercase().contains(&needle))
        .cloned()
        .collect()
}

/// Draws `n` distinct events uniformly without replacement.
///
/// Uses a partial Fisher-Yates shuffle driven by [`SplitMix64`], so the same
/// seed selects the same events on every platform. The sample is returned in
/// chronological order (date, then id).
pub fn sample_events(
    events: &[ConflictEvent],
    n: usize,
    seed: u64,
) -> Result<Vec<ConflictEvent>, EventsError> {
    if n > events.len() {
        return Err(EventsError::SampleTooLarge {
            requested: n,
            available: events.len(),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut indices: Vec<usize> = (0..events.len()).collect();
    for i in 0..n {
        let remaining = (events.len() - i) as u64;
        let j = i + rng.next_below(remaining) as usize;
        indices.swap(i, j);
    }
    let mut sample: Vec<ConflictEvent> = indices[..n].iter().map(|&i| events[i].clone()).collect();
    sample.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(sample)
}

/// Writes events as CSV with canonical headers. `load_events` with the
/// default [`ColumnMap`] reads the output back identically.
pub fn write_events_csv<W: Write>(events: &[ConflictEvent], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "event_id",
        "conflict_name",
        "attacker_label",
        "event_date",
        "location_name",
        "latitude",
        "longitude",
        "source_article",
        "reference_fatalities",
    ])?;
    for e in events {
        w.write_record([
            e.event_id.as_str(),
            e.conflict_name.as_str(),
            e.attacker_label.as_str(),
            &e.event_date.to_string(),
            e.location_name.as_str(),
            &e.latitude.to_string(),
            &e.longitude.to_string(),
            e.source_article.as_str(),
            &e.reference_fatalities
                .map(|v| v.to_string())
                .unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience wrapper writing to a path.
pub fn write_events_file(events: &[ConflictEvent], path: &Path) -> Result<(), EventsError> {
    let file = std::fs::File::create(path).map_err(|e| EventsError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_events_csv(events, file).map_err(|e| EventsError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(id: &str, date: &str, article: &str) -> ConflictEvent {
        ConflictEvent {
            event_id: id.to_string(),
            conflict_name: "demo".into(),
            attacker_label: "Israeli".into(),
            event_date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            location_name: "somewhere".into(),
            latitude: 31.5,
            longitude: 34.4,
            source_article: article.to_string(),
            reference_fatalities: None,
        }
    }

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn loads_mapped_columns() {
        let csv = "id,conflict,side,date,place,lat,lon,article,best\n\
                   E1,Israel: Palestine,Israeli,2014-08-21,Nuseirat refugee camp,31.45,34.39,airstrike hit,4\n";
        let f = write_temp(csv);
        let map = ColumnMap {
            event_id: "id".into(),
            conflict_name: "conflict".into(),
            attacker_label: "side".into(),
            event_date: "date".into(),
            location_name: "place".into(),
            latitude: "lat".into(),
            longitude: "lon".into(),
            source_article: "article".into(),
            reference_fatalities: "best".into(),
        };
        let events = load_events(f.path(), &map).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].attacker_label, "Israeli");
        assert_eq!(events[0].event_date.to_string(), "2014-08-21");
        assert_eq!(events[0].location_name, "Nuseirat refugee camp");
        assert_eq!(events[0].reference_fatalities, Some(4));
    }

    #[test]
    fn header_only_file_yields_empty_list() {
        let f = write_temp(
            "event_id,conflict_name,attacker_label,event_date,location_name,latitude,longitude,source_article\n",
        );
        let events = load_events(f.path(), &ColumnMap::default()).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn bad_latitude_error_names_row_two() {
        let f = write_temp(
            "event_id,conflict_name,attacker_label,event_date,location_name,latitude,longitude,source_article\n\
             E1,c,a,2014-08-21,p,abc,34.0,airstrike\n",
        );
        let err = load_events(f.path(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, EventsError::Row { row: 2, .. }), "{err}");
        assert!(err.to_string().contains("latitude"));
    }

    #[test]
    fn missing_mapped_column_is_an_error() {
        let f = write_temp("event_id,conflict_name\nE1,c\n");
        let err = load_events(f.path(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, EventsError::MissingColumn { .. }), "{err}");
    }

    #[test]
    fn missing_reference_column_is_tolerated() {
        let f = write_temp(
            "event_id,conflict_name,attacker_label,event_date,location_name,latitude,longitude,source_article\n\
             E1,c,a,2014-08-21,p,31.0,34.0,airstrike\n",
        );
        let events = load_events(f.path(), &ColumnMap::default()).unwrap();
        assert_eq!(events[0].reference_fatalities, None);
    }

    #[test]
    fn duplicate_event_id_is_an_error() {
        let f = write_temp(
            "event_id,conflict_name,attacker_label,event_date,location_name,latitude,longitude,source_article\n\
             E1,c,a,2014-08-21,p,31.0,34.0,x\n\
             E1,c,a,2014-08-22,p,31.0,34.0,x\n",
        );
        let err = load_events(f.path(), &ColumnMap::default()).unwrap_err();
        assert!(
            matches!(err, EventsError::DuplicateId { row: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn date_with_time_suffix_parses() {
        assert_eq!(
            parse_event_date("2015-08-08 00:00:00.000")
                .unwrap()
                .to_string(),
            "2015-08-08"
        );
    }

    #[test]
    fn filter_is_case_insensitive_substring() {
        let events = vec![
            event("E1", "2014-08-21", "An Airstrike hit the camp"),
            event("E2", "2014-08-22", "shelling reported"),
            event("E3", "2014-08-23", "another airstrike nearby"),
        ];
        let kept = filter_airstrikes(&events, "AIRSTRIKE");
        assert_eq!(
            kept.iter().map(|e| e.event_id.as_str()).collect::<Vec<_>>(),
            ["E1", "E3"]
        );
    }

    #[test]
    fn filter_is_idempotent() {
        let events = vec![
            event("E1", "2014-08-21", "airstrike"),
            event("E2", "2014-08-22", "raid"),
        ];
        let once = filter_airstrikes(&events, "airstrike");
        let twice = filter_airstrikes(&once, "airstrike");
        assert_eq!(once, twice);
    }

    #[test]
    fn exhaustive_sample_returns_everything_sorted() {
        let events = vec![event("B", "2014-09-01", "x"), event("A", "2014-08-21", "x")];
        let sample = sample_events(&events, 2, 99).unwrap();
        assert_eq!(
            sample
                .iter()
                .map(|e| e.event_id.as_str())
                .collect::<Vec<_>>(),
            ["A", "B"]
        );
    }

    #[test]
    fn same_seed_same_sample() {
        let events: Vec<_> = (0..20)
            .map(|i| event(&format!("E{i:02}"), "2014-08-21", "x"))
            .collect();
        let a = sample_events(&events, 10, 7).unwrap();
        let b = sample_events(&events, 10, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_usually_differ() {
        let events: Vec<_> = (0..200)
            .map(|i| event(&format!("E{i:03}"), "2014-08-21", "x"))
            .collect();
        let a = sample_events(&events, 10, 1).unwrap();
        let b = sample_events(&events, 10, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn oversized_sample_is_an_error() {
        let events = vec![event("E1", "2014-08-21", "x")];
        assert!(matches!(
            sample_events(&events, 2, 0),
            Err(EventsError::SampleTooLarge {
                requested: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn sample_is_distinct_subset_of_input() {
        let events: Vec<_> = (0..30)
            .map(|i| event(&format!("E{i:02}"), "2014-08-21", "x"))
            .collect();
        let sample = sample_events(&events, 12, 3).unwrap();
        assert_eq!(sample.len(), 12);
        let ids: HashSet<_> = sample.iter().map(|e| e.event_id.clone()).collect();
        assert_eq!(ids.len(), 12);
        for e in &sample {
            assert!(events.contains(e));
        }
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let events = vec![
            ConflictEvent {
                event_id: "E1".into(),
                conflict_name: "Israel: Palestine".into(),
                attacker_label: "Israeli".into(),
                event_date: NaiveDate::from_ymd_opt(2014, 8, 21).unwrap(),
                location_name: "the Nuseirat refugee camp".into(),
                latitude: 31.4552,
                longitude: 34.39335,
                source_article: "An airstrike, reportedly \"precise\",\nhit the camp".into(),
                reference_fatalities: Some(4),
            },
            event("E2", "2015-08-08", "airstrike near Midyat"),
        ];
        let mut buf = Vec::new();
        write_events_csv(&events, &mut buf).unwrap();
        let f = write_temp(std::str::from_utf8(&buf).unwrap());
        let reloaded = load_events(f.path(), &ColumnMap::default()).unwrap();
        assert_eq!(events, reloaded);
    }
}
