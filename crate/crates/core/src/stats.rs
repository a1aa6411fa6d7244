//! Per-(event, language) statistics, per-language aggregates, and the
//! attacker-vs-target percentage bias.
//!
//! Everything here is generic over [`Scalar`] and pure. Means cover Numeric
//! answers only; evasive and otherwise-excluded answers are tallied but never
//! enter a mean. Dispersion is reported as the standard deviation of the mean
//! (sample standard deviation over the square root of n), computed with
//! Welford's streaming recurrence.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lang::LanguageCode;
use crate::scalar::Scalar;

/// Casualty counts extracted from one Numeric answer. `fatalities` is always
/// present for a Numeric answer; the other quantities only when the answer
/// states them.
#[derive(Debug, Clone, PartialEq)]
pub struct CasualtyCounts<F> {
    pub fatalities: F,
    pub civilians: Option<F>,
    pub injured: Option<F>,
    pub children: Option<F>,
}

/// How one trial enters the statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome<F> {
    Numeric(CasualtyCounts<F>),
    Evasive,
    /// NonExact, Unparsed, and failed trials: excluded from all statistics.
    ExcludedOther,
}

/// All trial outcomes of one (event, language) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EventCell<F> {
    pub event_id: String,
    pub outcomes: Vec<TrialOutcome<F>>,
}

/// The per-cell mean/dispersion summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLanguageStats<F> {
    pub event_id: String,
    pub language: LanguageCode,
    pub n_numeric: usize,
    pub n_evasive: usize,
    pub n_excluded_other: usize,
    pub mean_fatalities: Option<F>,
    pub sdom_fatalities: Option<F>,
    pub mean_civilians: Option<F>,
    pub sdom_civilians: Option<F>,
    pub mean_injured: Option<F>,
    pub sdom_injured: Option<F>,
    pub mean_children: Option<F>,
    pub sdom_children: Option<F>,
}

/// Per-language averages over events, plus the evasive tally.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageAggregate<F> {
    pub language: LanguageCode,
    pub avg_fatalities: Option<F>,
    pub avg_injured: Option<F>,
    pub avg_civilians: Option<F>,
    pub total_evasive: usize,
}

/// Why a case was left out of the bias computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseExclusion {
    NoNumericAttacker,
    NoNumericTarget,
    AllEvasiveAttacker,
    AllEvasiveTarget,
    ZeroTargetMean,
}

impl CaseExclusion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NoNumericAttacker => "no_numeric_attacker",
            Self::NoNumericTarget => "no_numeric_target",
            Self::AllEvasiveAttacker => "all_evasive_attacker",
            Self::AllEvasiveTarget => "all_evasive_target",
            Self::ZeroTargetMean => "zero_target_mean",
        }
    }
}

/// Per-case percentage differences and their spread across cases.
///
/// Sign convention: negative means the attacker-language estimate is lower
/// than the target-language estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadBiasSummary<F> {
    pub per_case: Vec<(String, F)>,
    pub mean_bias_pct: F,
    /// Sample standard deviation across cases; absent with fewer than 2 cases.
    pub sd_cases_pct: Option<F>,
    /// sd_cases_pct / sqrt(cases); absent with fewer than 2 cases.
    pub sdom_cases_pct: Option<F>,
    pub excluded: Vec<(String, CaseExclusion)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("attacker and target statistics cover different events (first difference: '{0}')")]
    EventSetMismatch(String),
    #[error("no cases left after exclusions; bias is undefined")]
    NoIncludedCases,
}

/// Streaming mean via Welford's recurrence. `None` on empty input.
pub fn mean<F: Scalar>(values: &[F]) -> Option<F> {
    accumulate(values).map(|(mean, _, _)| mean)
}

/// Sample standard deviation (n - 1 denominator). `None` below two values.
pub fn sample_sd<F: Scalar>(values: &[F]) -> Option<F> {
    let (_, m2, n) = accumulate(values)?;
    if n < 2 {
        return None;
    }
    Some((m2 / F::from_count(n - 1)).sqrt())
}

/// Standard deviation of the mean: sample SD over sqrt(n). `None` below two
/// values.
pub fn sdom<F: Scalar>(values: &[F]) -> Option<F> {
    let n = values.len();
    sample_sd(values).map(|sd| sd / F::from_count(n).sqrt())
}

fn accumulate<F: Scalar>(values: &[F]) -> Option<(F, F, usize)> {
    if values.is_empty() {
        return None;
    }
    let mut mean = F::zero();
    let mut m2 = F::zero();
    for (i, &value) in values.iter().enumerate() {
        let delta = value - mean;
        mean = mean + delta / F::from_count(i + 1);
        m2 = m2 + delta * (value - mean);
    }
    Some((mean, m2, values.len()))
}

/// Summarizes one cell. All outcomes must belong to one (event, language).
pub fn event_stats<F: Scalar>(
    event_id: &str,
    language: &LanguageCode,
    outcomes: &[TrialOutcome<F>],
) -> EventLanguageStats<F> {
    let mut fatalities = Vec::new();
    let mut civilians = Vec::new();
    let mut injured = Vec::new();
    let mut children = Vec::new();
    let mut n_evasive = 0;
    let mut n_excluded_other = 0;
    for outcome in outcomes {
        match outcome {
            TrialOutcome::Numeric(counts) => {
                fatalities.push(counts.fatalities);
                if let Some(v) = counts.civilians {
                    civilians.push(v);
                }
                if let Some(v) = counts.injured {
                    injured.push(v);
                }
                if let Some(v) = counts.children {
                    children.push(v);
                }
            }
            TrialOutcome::Evasive => n_evasive += 1,
            TrialOutcome::ExcludedOther => n_excluded_other += 1,
        }
    }
    EventLanguageStats {
        event_id: event_id.to_string(),
        language: language.clone(),
        n_numeric: fatalities.len(),
        n_evasive,
        n_excluded_other,
        mean_fatalities: mean(&fatalities),
        sdom_fatalities: sdom(&fatalities),
        mean_civilians: mean(&civilians),
        sdom_civilians: sdom(&civilians),
        mean_injured: mean(&injured),
        sdom_injured: sdom(&injured),
        mean_children: mean(&children),
        sdom_children: sdom(&children),
    }
}

/// Unweighted mean of per-event means; events without numeric data for a
/// quantity are skipped for that quantity. Evasive counts are summed.
pub fn aggregate<F: Scalar>(
    language: &LanguageCode,
    stats: &[EventLanguageStats<F>],
) -> LanguageAggregate<F> {
    let collect = |pick: fn(&EventLanguageStats<F>) -> Option<F>| -> Vec<F> {
        stats.iter().filter_map(pick).collect()
    };
    LanguageAggregate {
        language: language.clone(),
        avg_fatalities: mean(&collect(|s| s.mean_fatalities)),
        avg_injured: mean(&collect(|s| s.mean_injured)),
        avg_civilians: mean(&collect(|s| s.mean_civilians)),
        total_evasive: stats.iter().map(|s| s.n_evasive).sum(),
    }
}

/// Per case: `100 * (mean_attacker - mean_target) / mean_target`.
///
/// A case is excluded when either side has no numeric answers, when all of a
/// side's answers are evasive, or when the target mean is zero (the ratio is
/// undefined where no casualties are reported).
pub fn dyad_bias<F: Scalar>(
    attacker: &[EventLanguageStats<F>],
    target: &[EventLanguageStats<F>],
) -> Result<DyadBiasSummary<F>, StatsError> {
    let attacker_by_event: BTreeMap<&str, &EventLanguageStats<F>> =
        attacker.iter().map(|s| (s.event_id.as_str(), s)).collect();
    let target_by_event: BTreeMap<&str, &EventLanguageStats<F>> =
        target.iter().map(|s| (s.event_id.as_str(), s)).collect();
    for id in attacker_by_event.keys() {
        if !target_by_event.contains_key(id) {
            return Err(StatsError::EventSetMismatch(id.to_string()));
        }
    }
    for id in target_by_event.keys() {
        if !attacker_by_event.contains_key(id) {
            return Err(StatsError::EventSetMismatch(id.to_string()));
        }
    }

    let mut per_case = Vec::new();
    let mut excluded = Vec::new();
    for (id, att) in &attacker_by_event {
        let tgt = target_by_event[id];
        let exclusion = case_exclusion(att, tgt);
        if let Some(reason) = exclusion {
            excluded.push((id.to_string(), reason));
            continue;
        }
        let mean_att = att.mean_fatalities.expect("checked by exclusion rule");
        let mean_tgt = tgt.mean_fatalities.expect("checked by exclusion rule");
        per_case.push((id.to_string(), bias_pct(mean_att, mean_tgt)));
    }
    summarize_cases(per_case, excluded)
}

fn case_exclusion<F: Scalar>(
    attacker: &EventLanguageStats<F>,
    target: &EventLanguageStats<F>,
) -> Option<CaseExclusion> {
    let all_evasive =
        |s: &EventLanguageStats<F>| s.n_evasive > 0 && s.n_numeric == 0 && s.n_excluded_other == 0;
    if all_evasive(attacker) {
        return Some(CaseExclusion::AllEvasiveAttacker);
    }
    if all_evasive(target) {
        return Some(CaseExclusion::AllEvasiveTarget);
    }
    if attacker.n_numeric == 0 {
        return Some(CaseExclusion::NoNumericAttacker);
    }
    if target.n_numeric == 0 {
        return Some(CaseExclusion::NoNumericTarget);
    }
    if target.mean_fatalities == Some(F::zero()) {
        return Some(CaseExclusion::ZeroTargetMean);
    }
    None
}

fn bias_pct<F: Scalar>(mean_attacker: F, mean_target: F) -> F {
    F::hundred() * (mean_attacker - mean_target) / mean_target
}

fn summarize_cases<F: Scalar>(
    per_case: Vec<(String, F)>,
    excluded: Vec<(String, CaseExclusion)>,
) -> Result<DyadBiasSummary<F>, StatsError> {
    let values: Vec<F> = per_case.iter().map(|(_, v)| *v).collect();
    let mean_bias_pct = mean(&values).ok_or(StatsError::NoIncludedCases)?;
    Ok(DyadBiasSummary {
        sd_cases_pct: sample_sd(&values),
        sdom_cases_pct: sdom(&values),
        per_case,
        mean_bias_pct,
        excluded,
    })
}

/// Mean bias when every evasive answer is counted as a zero-fatality numeric
/// answer. Cells driven to a zero mean this way fall under the
/// zero-target-mean exclusion; NonExact, Unparsed, and failed trials stay
/// excluded entirely.
pub fn bias_with_evasives<F: Scalar>(
    attacker: &[EventCell<F>],
    target: &[EventCell<F>],
) -> Result<F, StatsError> {
    let attacker_by_event: BTreeMap<&str, &EventCell<F>> =
        attacker.iter().map(|c| (c.event_id.as_str(), c)).collect();
    let target_by_event: BTreeMap<&str, &EventCell<F>> =
        target.iter().map(|c| (c.event_id.as_str(), c)).collect();
    for id in attacker_by_event.keys() {
        if !target_by_event.contains_key(id) {
            return Err(StatsError::EventSetMismatch(id.to_string()));
        }
    }
    for id in target_by_event.keys() {
        if !attacker_by_event.contains_key(id) {
            return Err(StatsError::EventSetMismatch(id.to_string()));
        }
    }

    let mut per_case = Vec::new();
    for (id, att) in &attacker_by_event {
        let tgt = target_by_event[id];
        let (mean_att, mean_tgt) =
            match (cell_mean_with_evasives(att), cell_mean_with_evasives(tgt)) {
                (Some(a), Some(t)) => (a, t),
                _ => continue,
            };
        if mean_tgt == F::zero() {
            continue;
        }
        per_case.push(bias_pct(mean_att, mean_tgt));
    }
    mean(&per_case).ok_or(StatsError::NoIncludedCases)
}

fn cell_mean_with_evasives<F: Scalar>(cell: &EventCell<F>) -> Option<F> {
    let values: Vec<F> = cell
        .outcomes
        .iter()
        .filter_map(|o| match o {
            TrialOutcome::Numeric(counts) => Some(counts.fatalities),
            TrialOutcome::Evasive => Some(F::zero()),
            TrialOutcome::ExcludedOther => None,
        })
        .collect();
    mean(&values)
}
