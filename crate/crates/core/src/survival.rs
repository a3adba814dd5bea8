// SPDX-License-Identifier: Apache-2.0

//! Kaplan-Meier estimation over toggle lifespans, lifespan tiers, and
//! detection of toggles that outlived every removed toggle.
//!
//! Removed toggles are events at their lifespan; active toggles are
//! right-censored at their age on the snapshot instant. Negative lifespans
//! are left out unless the caller asks for them, in which case they are
//! clamped to zero.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ledger::ToggleRecord;
use crate::timefmt::Instant;

/// One observed duration: a removal (`event`) or a censoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
}

impl Observation {
    pub fn death(time: f64) -> Self {
        Observation { time, event: true }
    }

    pub fn censored(time: f64) -> Self {
        Observation { time, event: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalStep {
    pub t: f64,
    pub survival: f64,
    pub at_risk: usize,
    pub deaths: usize,
    pub censored: usize,
}

/// Product-limit step function, one step per distinct observed time.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SurvivalCurve {
    pub steps: Vec<SurvivalStep>,
    pub n_total: usize,
}

impl SurvivalCurve {
    /// Estimated `S(t)`: survival just after the last step at or before `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.t <= t);
        if idx == 0 {
            1.0
        } else {
            self.steps[idx - 1].survival
        }
    }

    pub fn total_deaths(&self) -> usize {
        self.steps.iter().map(|s| s.deaths).sum()
    }

    pub fn total_censored(&self) -> usize {
        self.steps.iter().map(|s| s.censored).sum()
    }

    /// `t,survival,at_risk,deaths,censored` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,survival,at_risk,deaths,censored\n");
        for s in &self.steps {
            let _ = writeln!(out, "{},{},{},{},{}", s.t, s.survival, s.at_risk, s.deaths, s.censored);
        }
        out
    }
}

/// Kaplan-Meier estimate for raw observations.
///
/// Observations are grouped by exact time. At a shared time deaths are
/// applied before censorings, so censored subjects still count as at risk.
pub fn product_limit(observations: &[Observation]) -> Result<SurvivalCurve> {
    if let Some(bad) = observations.iter().find(|o| !o.time.is_finite() || o.time < 0.0) {
        return Err(Error::domain(format!(
            "survival times must be finite and non-negative, got {}",
            bad.time
        )));
    }
    let mut sorted = observations.to_vec();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));

    let n_total = sorted.len();
    let mut steps = Vec::new();
    let mut at_risk = n_total;
    // Between censorings the product of (n - d) / n telescopes, so survival
    // is tracked as segment_base * remaining / segment_risk with one rounding.
    let mut segment_base = 1.0;
    let mut segment_risk = n_total;
    for group in sorted.chunk_by(|a, b| a.time == b.time) {
        let deaths = group.iter().filter(|o| o.event).count();
        let censored = group.len() - deaths;
        let prev = steps.last().map_or(1.0, |s: &SurvivalStep| s.survival);
        let survival = if deaths == 0 {
            prev
        } else {
            // min() guards the one-ulp wobble when a new segment starts.
            (segment_base * (at_risk - deaths) as f64 / segment_risk as f64).min(prev)
        };
        if censored > 0 {
            segment_base = survival;
            segment_risk = at_risk - group.len();
        }
        steps.push(SurvivalStep {
            t: group[0].time,
            survival,
            at_risk,
            deaths,
            censored,
        });
        at_risk -= group.len();
    }
    Ok(SurvivalCurve { steps, n_total })
}

fn clamp_lifespan(record: &ToggleRecord, include_anomalous: bool) -> Option<f64> {
    let lifespan = record.lifespan_days?;
    if record.anomalous || lifespan < 0.0 {
        include_anomalous.then_some(lifespan.max(0.0))
    } else {
        Some(lifespan)
    }
}

/// Survival observations derived from toggle records at `censor_at`.
pub fn observations(
    records: &[ToggleRecord],
    censor_at: &Instant,
    include_anomalous: bool,
) -> Result<Vec<Observation>> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if r.is_removed() {
            if let Some(t) = clamp_lifespan(r, include_anomalous) {
                out.push(Observation::death(t));
            }
        } else {
            let age = r.age_at(censor_at);
            if age < 0.0 {
                return Err(Error::domain(format!(
                    "toggle `{}` was added after the censoring instant",
                    r.label()
                )));
            }
            out.push(Observation::censored(age));
        }
    }
    Ok(out)
}

/// Kaplan-Meier curve over toggle lifespans, censoring active toggles at `censor_at`.
pub fn kaplan_meier(records: &[ToggleRecord], censor_at: &Instant, include_anomalous: bool) -> Result<SurvivalCurve> {
    product_limit(&observations(records, censor_at, include_anomalous)?)
}

/// Smallest step time with `S(t) <= 0.5`; `None` when the curve stays above.
pub fn median_survival(curve: &SurvivalCurve) -> Option<f64> {
    curve.steps.iter().find(|s| s.survival <= 0.5).map(|s| s.t)
}

/// Linear-interpolation quantile (R type 7) of an ascending slice.
pub fn quantile_type7(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Active toggle that has outlived every removed toggle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermanentToggle {
    pub record: ToggleRecord,
    pub age_days: f64,
    pub excess_days: f64,
}

/// Removed toggles split at the first and third quartile of their lifespans.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanTiers {
    pub q1_days: f64,
    pub q3_days: f64,
    pub temporary: Vec<ToggleRecord>,
    pub intermediate: Vec<ToggleRecord>,
    pub long_lived: Vec<ToggleRecord>,
    pub permanent: Vec<PermanentToggle>,
}

impl LifespanTiers {
    pub fn classified_count(&self) -> usize {
        self.temporary.len() + self.intermediate.len() + self.long_lived.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tiering {
    Classified(LifespanTiers),
    /// No removed toggle yet; quartiles are undefined.
    NoRemovals,
}

/// Splits removed records into temporary (`< q1`), intermediate, and
/// long-lived (`>= q3`) tiers. The `permanent` list is left empty.
pub fn classify_tiers(records: &[ToggleRecord], include_anomalous: bool) -> Tiering {
    let mut removed: Vec<(f64, &ToggleRecord)> = records
        .iter()
        .filter(|r| r.is_removed())
        .filter_map(|r| clamp_lifespan(r, include_anomalous).map(|t| (t, r)))
        .collect();
    if removed.is_empty() {
        return Tiering::NoRemovals;
    }
    removed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lifespans: Vec<f64> = removed.iter().map(|(t, _)| *t).collect();
    let q1 = quantile_type7(&lifespans, 0.25).expect("non-empty");
    let q3 = quantile_type7(&lifespans, 0.75).expect("non-empty");

    let mut tiers = LifespanTiers {
        q1_days: q1,
        q3_days: q3,
        temporary: Vec::new(),
        intermediate: Vec::new(),
        long_lived: Vec::new(),
        permanent: Vec::new(),
    };
    for (t, r) in removed {
        let bucket = if t >= q3 {
            &mut tiers.long_lived
        } else if t < q1 {
            &mut tiers.temporary
        } else {
            &mut tiers.intermediate
        };
        bucket.push(r.clone());
    }
    Tiering::Classified(tiers)
}

/// Result of [`flag_permanent`].
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PermanentScan {
    /// Longest lifespan of any removed toggle; `None` when nothing was removed.
    pub threshold_days: Option<f64>,
    pub flagged: Vec<PermanentToggle>,
}

/// Active toggles whose age at `censor_at` strictly exceeds the longest
/// removed lifespan, ordered by excess (largest first).
pub fn flag_permanent(records: &[ToggleRecord], censor_at: &Instant) -> PermanentScan {
    let threshold = records
        .iter()
        .filter(|r| r.is_removed() && !r.anomalous)
        .filter_map(|r| r.lifespan_days)
        .max_by(f64::total_cmp);
    let Some(max_removed) = threshold else {
        return PermanentScan::default();
    };
    let mut flagged: Vec<PermanentToggle> = records
        .iter()
        .filter(|r| r.is_active())
        .filter_map(|r| {
            let age = r.age_at(censor_at);
            (age > max_removed).then(|| PermanentToggle {
                record: r.clone(),
                age_days: age,
                excess_days: age - max_removed,
            })
        })
        .collect();
    flagged.sort_by(|a, b| {
        b.excess_days
            .total_cmp(&a.excess_days)
            .then_with(|| a.record.toggle_name.cmp(&b.record.toggle_name))
            .then_with(|| a.record.occurrence.cmp(&b.record.occurrence))
            .then_with(|| a.record.added_at.cmp(&b.record.added_at))
            .then(Ordering::Equal)
    });
    PermanentScan {
        threshold_days: Some(max_removed),
        flagged,
    }
}
