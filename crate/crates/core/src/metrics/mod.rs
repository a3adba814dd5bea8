// SPDX-License-Identifier: Apache-2.0

//! The five benchmark metrics and the monthly/daily activity series.

mod series;

pub use series::{active_series, monthly_series, DailyActive, MonthlyCount, YearMonth};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{EventLedger, ProjectContext};

/// Average month length used when inferring an analysis period from dates.
pub const DAYS_PER_MONTH: f64 = 30.44;

/// Relative divergence between configured and inferred `T` that triggers a warning.
pub const PERIOD_DIVERGENCE_WARNING: f64 = 0.05;

fn positive(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!("{what} must be positive, got {value}")))
    }
}

/// Toggle events (additions plus removals) per month.
pub fn churn_rate(additions: u64, removals: u64, months: f64) -> Result<f64> {
    let months = positive(months, "analysis period")?;
    Ok((additions + removals) as f64 / months)
}

/// Additions minus removals per month; negative when the inventory shrinks.
pub fn net_accumulation(additions: u64, removals: u64, months: f64) -> Result<f64> {
    let months = positive(months, "analysis period")?;
    Ok((additions as f64 - removals as f64) / months)
}

/// Share of added toggles that were removed; `None` without additions.
pub fn cleanup_ratio(additions: u64, removals: u64) -> Option<f64> {
    (additions > 0).then(|| removals as f64 / additions as f64)
}

/// Active toggles per thousand lines of code.
pub fn toggle_density(active: u64, lines_of_code: u64) -> Result<f64> {
    if lines_of_code == 0 {
        return Err(Error::domain("lines of code must be positive"));
    }
    Ok(active as f64 / lines_of_code as f64 * 1000.0)
}

/// Median survival expressed in release cycles.
pub fn normalized_lifespan(median_survival_days: f64, release_cycle_days: f64) -> Result<f64> {
    let cycle = positive(release_cycle_days, "release cycle")?;
    if !median_survival_days.is_finite() || median_survival_days < 0.0 {
        return Err(Error::domain(format!(
            "median survival must be a non-negative number of days, got {median_survival_days}"
        )));
    }
    Ok(median_survival_days / cycle)
}

/// Raw counts and denominators behind a [`MetricSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricInputs {
    pub additions_total: u64,
    pub removals_total: u64,
    pub active_count: u64,
    pub analysis_months: f64,
    pub lines_of_code: u64,
    pub release_cycle_days: f64,
    pub median_survival_days: Option<f64>,
}

/// Benchmark metrics for one project, serialised as a flat JSON object.
///
/// A metric is `None` when it is undefined for the project; `notes` then
/// carries the reason keyed by the metric's field name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub project: String,
    pub churn_rate: Option<f64>,
    pub net_accumulation: Option<f64>,
    pub cleanup_ratio: Option<f64>,
    pub toggle_density: Option<f64>,
    pub normalized_lifespan: Option<f64>,
    #[serde(flatten)]
    pub inputs: MetricInputs,
    pub snapshot_date: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl MetricSet {
    pub fn compute(
        ctx: &ProjectContext,
        additions: u64,
        removals: u64,
        active: u64,
        median_survival_days: Option<f64>,
    ) -> Result<Self> {
        ctx.validate()?;
        let cleanup = cleanup_ratio(additions, removals);
        let lifespan = median_survival_days
            .map(|m| normalized_lifespan(m, ctx.release_cycle_days))
            .transpose()?;
        let mut notes = BTreeMap::new();
        if cleanup.is_none() {
            notes.insert("cleanup_ratio".to_string(), "no additions observed".to_string());
        }
        if lifespan.is_none() {
            notes.insert(
                "normalized_lifespan".to_string(),
                "median survival undefined: the survival curve never reaches 0.5".to_string(),
            );
        }
        Ok(MetricSet {
            project: ctx.project_name.clone(),
            churn_rate: Some(churn_rate(additions, removals, ctx.analysis_months)?),
            net_accumulation: Some(net_accumulation(additions, removals, ctx.analysis_months)?),
            cleanup_ratio: cleanup,
            toggle_density: Some(toggle_density(active, ctx.lines_of_code)?),
            normalized_lifespan: lifespan,
            inputs: MetricInputs {
                additions_total: additions,
                removals_total: removals,
                active_count: active,
                analysis_months: ctx.analysis_months,
                lines_of_code: ctx.lines_of_code,
                release_cycle_days: ctx.release_cycle_days,
                median_survival_days,
            },
            snapshot_date: ctx.snapshot_time.date_naive().format("%Y-%m-%d").to_string(),
            notes,
        })
    }

    /// Every metric undefined: the ledger holds no toggle events.
    pub fn without_events(ctx: &ProjectContext) -> Result<Self> {
        let mut set = Self::compute(ctx, 0, 0, 0, None)?;
        set.churn_rate = None;
        set.net_accumulation = None;
        set.toggle_density = None;
        set.notes = [
            "churn_rate",
            "net_accumulation",
            "cleanup_ratio",
            "toggle_density",
            "normalized_lifespan",
        ]
        .iter()
        .map(|k| (k.to_string(), "no toggle events in the ledger".to_string()))
        .collect();
        Ok(set)
    }

    pub fn values(&self) -> MetricValues {
        MetricValues {
            churn_rate: self.churn_rate,
            net_accumulation: self.net_accumulation,
            cleanup_ratio: self.cleanup_ratio,
            toggle_density: self.toggle_density,
            normalized_lifespan: self.normalized_lifespan,
        }
    }

    pub fn note(&self, field: &str) -> Option<&str> {
        self.notes.get(field).map(String::as_str)
    }
}

/// The five metric values alone, any of which may be missing.
///
/// This is the shape shared by hand-entered values, `metrics.json` files and
/// community CSV rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    #[serde(default)]
    pub churn_rate: Option<f64>,
    #[serde(default)]
    pub net_accumulation: Option<f64>,
    #[serde(default)]
    pub cleanup_ratio: Option<f64>,
    #[serde(default)]
    pub toggle_density: Option<f64>,
    #[serde(default)]
    pub normalized_lifespan: Option<f64>,
}

impl MetricValues {
    pub fn new(churn: f64, net: f64, cleanup: f64, density: f64, lifespan: f64) -> Self {
        MetricValues {
            churn_rate: Some(churn),
            net_accumulation: Some(net),
            cleanup_ratio: Some(cleanup),
            toggle_density: Some(density),
            normalized_lifespan: Some(lifespan),
        }
    }

    /// Builds from up to five positional values in metric order.
    pub fn from_slice(values: &[Option<f64>]) -> Self {
        let at = |i: usize| values.get(i).copied().flatten();
        MetricValues {
            churn_rate: at(0),
            net_accumulation: at(1),
            cleanup_ratio: at(2),
            toggle_density: at(3),
            normalized_lifespan: at(4),
        }
    }
}

/// Analysis period implied by the ledger's first and last event, in months.
pub fn inferred_analysis_months(ledger: &EventLedger) -> Option<f64> {
    let first = ledger.events().first()?;
    let last = ledger.events().last()?;
    let days = crate::timefmt::days_between(&first.timestamp, &last.timestamp);
    (days > 0.0).then(|| days / DAYS_PER_MONTH)
}

/// Warning text when configured and inferred periods differ by more than 5%.
pub fn period_divergence_warning(configured: f64, inferred: Option<f64>) -> Option<String> {
    let inferred = inferred?;
    let rel = (configured - inferred).abs() / configured;
    (rel > PERIOD_DIVERGENCE_WARNING).then(|| {
        format!(
            "configured analysis period {configured:.1} months differs from the event span \
             ({inferred:.1} months) by {:.0}%",
            rel * 100.0
        )
    })
}
