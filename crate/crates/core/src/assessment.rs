// SPDX-License-Identifier: Apache-2.0

//! Threshold zones for the benchmark metrics and project profiling.
//!
//! Zones are half-open intervals `[min, max)`; a `null` bound is unbounded.
//! The same JSON table drives the command line and the dashboard.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricValues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Churn,
    NetAccumulation,
    CleanupRatio,
    Density,
    NormLifespan,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Churn,
        MetricId::NetAccumulation,
        MetricId::CleanupRatio,
        MetricId::Density,
        MetricId::NormLifespan,
    ];

    pub fn key(self) -> &'static str {
        match self {
            MetricId::Churn => "churn",
            MetricId::NetAccumulation => "net_accumulation",
            MetricId::CleanupRatio => "cleanup_ratio",
            MetricId::Density => "density",
            MetricId::NormLifespan => "norm_lifespan",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            MetricId::Churn => "Churn rate",
            MetricId::NetAccumulation => "Net accumulation",
            MetricId::CleanupRatio => "Cleanup ratio",
            MetricId::Density => "Toggle density",
            MetricId::NormLifespan => "Normalized lifespan",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            MetricId::Churn => "events/month",
            MetricId::NetAccumulation => "toggles/month",
            MetricId::CleanupRatio => "",
            MetricId::Density => "toggles/kLoC",
            MetricId::NormLifespan => "release cycles",
        }
    }

    /// Whether larger values are the less favourable direction.
    pub fn higher_is_worse(self) -> bool {
        !matches!(self, MetricId::CleanupRatio)
    }

    pub fn value_of(self, values: &MetricValues) -> Option<f64> {
        match self {
            MetricId::Churn => values.churn_rate,
            MetricId::NetAccumulation => values.net_accumulation,
            MetricId::CleanupRatio => values.cleanup_ratio,
            MetricId::Density => values.toggle_density,
            MetricId::NormLifespan => values.normalized_lifespan,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// One interpretation band `[min, max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub zone: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub description: String,
}

impl Zone {
    fn new(zone: &str, min: Option<f64>, max: Option<f64>, description: &str) -> Self {
        Zone {
            zone: zone.to_string(),
            min,
            max,
            description: description.to_string(),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.min.is_none_or(|lo| value >= lo) && self.max.is_none_or(|hi| value < hi)
    }
}

/// Zones per metric, ascending by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdTable {
    metrics: BTreeMap<MetricId, Vec<Zone>>,
}

/// The reference thresholds calibrated on the two baseline projects.
pub fn default_thresholds() -> ThresholdTable {
    let mut metrics = BTreeMap::new();
    metrics.insert(
        MetricId::Churn,
        vec![
            Zone::new("Low", Some(0.0), Some(15.0), "Deliberate changes"),
            Zone::new("Moderate", Some(15.0), Some(100.0), "Balanced activity"),
            Zone::new("High", Some(100.0), None, "Rapid iteration"),
        ],
    );
    metrics.insert(
        MetricId::NetAccumulation,
        vec![
            Zone::new("Sustainable", None, Some(2.0), "Cleanup keeps pace"),
            Zone::new("Warning", Some(2.0), Some(5.0), "Gradual debt"),
            Zone::new("Critical", Some(5.0), None, "One-in-one-out needed"),
        ],
    );
    metrics.insert(
        MetricId::CleanupRatio,
        vec![
            Zone::new("Critical", Some(0.0), Some(0.70), "Significant debt"),
            Zone::new("Warning", Some(0.70), Some(0.85), "Potential debt"),
            Zone::new("Healthy", Some(0.85), None, ">=85% removed"),
        ],
    );
    metrics.insert(
        MetricId::Density,
        vec![
            Zone::new("Conservative", Some(0.0), Some(0.02), "Low toggle footprint"),
            Zone::new("Moderate", Some(0.02), Some(0.10), "Typical density"),
            Zone::new("Aggressive", Some(0.10), None, "Strict cleanup needed"),
        ],
    );
    metrics.insert(
        MetricId::NormLifespan,
        vec![
            Zone::new("Short-lived", Some(0.0), Some(3.0), "Rapid cleanup"),
            Zone::new("Moderate", Some(3.0), Some(8.0), "Typical lifecycle"),
            Zone::new("Long-lived", Some(8.0), None, "Extended maintenance"),
        ],
    );
    ThresholdTable { metrics }
}

impl Default for ThresholdTable {
    fn default() -> Self {
        default_thresholds()
    }
}

impl ThresholdTable {
    /// Checks that every metric has contiguous, non-overlapping zones that
    /// are unbounded above.
    pub fn validate(&self) -> Result<()> {
        for id in MetricId::ALL {
            let zones = self
                .metrics
                .get(&id)
                .filter(|z| !z.is_empty())
                .ok_or_else(|| Error::config(format!("threshold table has no zones for `{id}`")))?;
            for z in zones {
                if let (Some(lo), Some(hi)) = (z.min, z.max) {
                    // Negated so NaN bounds are rejected too.
                    #[allow(clippy::neg_cmp_op_on_partial_ord)]
                    if !(lo < hi) {
                        return Err(Error::config(format!(
                            "zone `{}` of `{id}` has min {lo} >= max {hi}",
                            z.zone
                        )));
                    }
                }
                if z.min.is_some_and(|v| !v.is_finite()) || z.max.is_some_and(|v| !v.is_finite()) {
                    return Err(Error::config(format!(
                        "zone `{}` of `{id}` has a non-finite bound",
                        z.zone
                    )));
                }
            }
            for pair in zones.windows(2) {
                if pair[0].max.is_none() || pair[0].max != pair[1].min {
                    return Err(Error::config(format!(
                        "zones `{}` and `{}` of `{id}` are not contiguous",
                        pair[0].zone, pair[1].zone
                    )));
                }
            }
            if zones.last().and_then(|z| z.max).is_some() {
                return Err(Error::config(format!("last zone of `{id}` must be unbounded above")));
            }
            if id == MetricId::NetAccumulation && zones[0].min.is_some() {
                return Err(Error::config("first net_accumulation zone must be unbounded below"));
            }
        }
        if let Some(extra) = self.metrics.keys().find(|k| !MetricId::ALL.contains(k)) {
            return Err(Error::config(format!("unknown metric `{extra}`")));
        }
        Ok(())
    }

    pub fn zones(&self, id: MetricId) -> &[Zone] {
        self.metrics.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: ThresholdTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("threshold table serialises");
        s.push('\n');
        s
    }
}

/// Offset used around each bound when probing zone edges.
pub const BOUNDARY_EPSILON: f64 = 1e-9;

impl ThresholdTable {
    /// Every bound of `id` exactly and at `±BOUNDARY_EPSILON`, plus one
    /// interior point per zone; ascending, without duplicates.
    pub fn probe_values(&self, id: MetricId) -> Vec<f64> {
        let mut vals = Vec::new();
        for z in self.zones(id) {
            for b in [z.min, z.max].into_iter().flatten() {
                vals.extend([b - BOUNDARY_EPSILON, b, b + BOUNDARY_EPSILON]);
            }
            vals.push(match (z.min, z.max) {
                (Some(lo), Some(hi)) => (lo + hi) / 2.0,
                (Some(lo), None) => lo * 2.0 + 1.0,
                (None, Some(hi)) => hi - 1.0,
                (None, None) => 0.0,
            });
        }
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }
}

/// At least `min_len` five-tuples covering every probe value of every metric.
///
/// Tuple `i` takes probe `(i + 7k) mod len_k` for metric `k`, so the metrics
/// do not move in lockstep.
pub fn golden_grid(table: &ThresholdTable, min_len: usize) -> Vec<MetricValues> {
    let probes: Vec<Vec<f64>> = MetricId::ALL.iter().map(|&id| table.probe_values(id)).collect();
    let len = probes.iter().map(Vec::len).max().unwrap_or(0).max(min_len);
    (0..len)
        .map(|i| {
            let pick: Vec<Option<f64>> = probes
                .iter()
                .enumerate()
                .map(|(k, p)| (!p.is_empty()).then(|| p[(i + 7 * k) % p.len()]))
                .collect();
            MetricValues::from_slice(&pick)
        })
        .collect()
}

/// Zone classification outcome for one metric value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ZoneResult {
    Zone {
        zone: String,
        description: String,
        /// Position of the zone in ascending value order.
        index: usize,
    },
    NotAssessable {
        reason: String,
    },
}

impl ZoneResult {
    pub fn zone_name(&self) -> Option<&str> {
        match self {
            ZoneResult::Zone { zone, .. } => Some(zone),
            ZoneResult::NotAssessable { .. } => None,
        }
    }

    pub fn label(&self) -> &str {
        self.zone_name().unwrap_or("not assessable")
    }
}

/// Zone containing `value` for `metric`.
pub fn classify_zone(table: &ThresholdTable, metric: MetricId, value: Option<f64>) -> ZoneResult {
    let Some(value) = value else {
        return ZoneResult::NotAssessable {
            reason: "value missing".to_string(),
        };
    };
    if !value.is_finite() {
        return ZoneResult::NotAssessable {
            reason: format!("non-finite value {value}"),
        };
    }
    table
        .zones(metric)
        .iter()
        .enumerate()
        .find(|(_, z)| z.contains(value))
        .map(|(index, z)| ZoneResult::Zone {
            zone: z.zone.clone(),
            description: z.description.clone(),
            index,
        })
        .unwrap_or_else(|| ZoneResult::NotAssessable {
            reason: format!("{value} lies outside the {metric} zones"),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    Conservative,
    Aggressive,
    Mixed,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Conservative => "Conservative",
            Profile::Aggressive => "Aggressive",
            Profile::Mixed => "Mixed",
        })
    }
}

/// Zone requirements that define an archetype: every listed metric must sit
/// in one of its listed zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub requires: BTreeMap<MetricId, Vec<String>>,
}

impl Archetype {
    fn misses(&self, zones: &BTreeMap<MetricId, ZoneResult>) -> Vec<MetricId> {
        self.requires
            .iter()
            .filter(|(id, allowed)| {
                zones
                    .get(id)
                    .and_then(|z| z.zone_name())
                    .is_none_or(|name| !allowed.iter().any(|a| a == name))
            })
            .map(|(id, _)| *id)
            .collect()
    }
}

/// How zones map onto a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRule {
    pub conservative: Archetype,
    pub aggressive: Archetype,
    /// Zones worth calling out regardless of profile.
    pub concern_zones: BTreeMap<MetricId, Vec<String>>,
}

fn zone_list(pairs: &[(MetricId, &[&str])]) -> BTreeMap<MetricId, Vec<String>> {
    pairs
        .iter()
        .map(|(id, zones)| (*id, zones.iter().map(|z| z.to_string()).collect()))
        .collect()
}

impl Default for ProfileRule {
    /// Conservative: low churn, conservative density, sustainable accumulation.
    /// Aggressive: high churn with moderate or aggressive density.
    fn default() -> Self {
        ProfileRule {
            conservative: Archetype {
                requires: zone_list(&[
                    (MetricId::Churn, &["Low"]),
                    (MetricId::NetAccumulation, &["Sustainable"]),
                    (MetricId::Density, &["Conservative"]),
                ]),
            },
            aggressive: Archetype {
                requires: zone_list(&[
                    (MetricId::Churn, &["High"]),
                    (MetricId::Density, &["Moderate", "Aggressive"]),
                ]),
            },
            concern_zones: zone_list(&[
                (MetricId::NetAccumulation, &["Warning", "Critical"]),
                (MetricId::CleanupRatio, &["Warning", "Critical"]),
                (MetricId::Density, &["Aggressive"]),
                (MetricId::NormLifespan, &["Long-lived"]),
            ]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricAssessment {
    pub metric: MetricId,
    pub value: Option<f64>,
    #[serde(flatten)]
    pub zone: ZoneResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assessment {
    pub project_name: String,
    pub metrics: Vec<MetricAssessment>,
    pub profile: Profile,
    pub rationale: String,
    /// Metrics sitting in a zone that calls for attention.
    pub flagged: Vec<MetricId>,
}

impl Assessment {
    pub fn zone(&self, id: MetricId) -> Option<&MetricAssessment> {
        self.metrics.iter().find(|m| m.metric == id)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}: {} profile\n", self.project_name, self.profile);
        for m in &self.metrics {
            let value = m.value.map_or_else(|| "n/a".to_string(), format_value);
            match &m.zone {
                ZoneResult::Zone { zone, description, .. } => out.push_str(&format!(
                    "  {:<20} {:>10}  {:<13} {}\n",
                    m.metric.title(),
                    value,
                    zone,
                    description
                )),
                ZoneResult::NotAssessable { reason } => out.push_str(&format!(
                    "  {:<20} {:>10}  not assessable ({reason})\n",
                    m.metric.title(),
                    value
                )),
            }
        }
        out.push_str(&format!("  rationale: {}\n", self.rationale));
        out
    }
}

/// Shortest round-trip rendering of a metric value.
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

fn names(ids: &[MetricId]) -> String {
    ids.iter()
        .map(|id| id.title().to_lowercase())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Classifies every metric and derives the project profile.
pub fn assess_project(
    project_name: &str,
    values: &MetricValues,
    table: &ThresholdTable,
    rule: &ProfileRule,
) -> Assessment {
    let zones: BTreeMap<MetricId, ZoneResult> = MetricId::ALL
        .iter()
        .map(|&id| (id, classify_zone(table, id, id.value_of(values))))
        .collect();

    let flagged: Vec<MetricId> = zones
        .iter()
        .filter(|(id, z)| {
            z.zone_name()
                .is_some_and(|name| rule.concern_zones.get(id).is_some_and(|c| c.iter().any(|x| x == name)))
        })
        .map(|(id, _)| *id)
        .collect();

    let conservative_miss = rule.conservative.misses(&zones);
    let aggressive_miss = rule.aggressive.misses(&zones);
    let flag_note = if flagged.is_empty() {
        String::new()
    } else {
        let parts: Vec<String> = flagged
            .iter()
            .map(|id| format!("{} {}", id.title().to_lowercase(), zones[id].label()))
            .collect();
        format!("; attention: {}", parts.join(", "))
    };

    let (profile, rationale) = if *values == MetricValues::default() {
        (
            Profile::Mixed,
            "insufficient activity: no metric could be computed".to_string(),
        )
    } else if values.churn_rate == Some(0.0) {
        (
            Profile::Mixed,
            "insufficient activity: no toggle additions or removals in the analysis period".to_string(),
        )
    } else if conservative_miss.is_empty() {
        (
            Profile::Conservative,
            format!("low churn, conservative density and sustainable accumulation{flag_note}"),
        )
    } else if aggressive_miss.is_empty() {
        (
            Profile::Aggressive,
            format!("high churn with moderate-or-higher density{flag_note}"),
        )
    } else {
        let (closest, misses) = if aggressive_miss.len() < conservative_miss.len() {
            ("aggressive", &aggressive_miss)
        } else {
            ("conservative", &conservative_miss)
        };
        (
            Profile::Mixed,
            format!(
                "closest to the {closest} archetype; diverging metrics: {}{flag_note}",
                names(misses)
            ),
        )
    };

    Assessment {
        project_name: project_name.to_string(),
        metrics: MetricId::ALL
            .iter()
            .map(|&id| MetricAssessment {
                metric: id,
                value: id.value_of(values),
                zone: zones[&id].clone(),
            })
            .collect(),
        profile,
        rationale,
        flagged,
    }
}

/// Per-metric rows aligned across projects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub columns: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    pub profiles: Vec<Profile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub metric: MetricId,
    /// `(value, zone label)` per column.
    pub cells: Vec<(Option<f64>, String)>,
}

pub fn compare_projects(assessments: &[Assessment]) -> Result<Comparison> {
    if assessments.is_empty() {
        return Err(Error::config("comparison needs at least one assessment"));
    }
    let mut columns: Vec<String> = Vec::new();
    for a in assessments {
        let mut name = a.project_name.clone();
        let mut k = 2;
        while columns.contains(&name) {
            name = format!("{} ({k})", a.project_name);
            k += 1;
        }
        columns.push(name);
    }
    let rows = MetricId::ALL
        .iter()
        .map(|&id| ComparisonRow {
            metric: id,
            cells: assessments
                .iter()
                .map(|a| {
                    let m = a.zone(id).expect("assessment covers every metric");
                    (m.value, m.zone.label().to_string())
                })
                .collect(),
        })
        .collect();
    Ok(Comparison {
        columns,
        rows,
        profiles: assessments.iter().map(|a| a.profile).collect(),
    })
}

impl Comparison {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Metric |");
        for c in &self.columns {
            out.push_str(&format!(" {c} |"));
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.columns.len()));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} |", row.metric.title()));
            for (value, zone) in &row.cells {
                let v = value.map_or_else(|| "n/a".to_string(), format_value);
                out.push_str(&format!(" {v} ({zone}) |"));
            }
            out.push('\n');
        }
        out.push_str("| Profile |");
        for p in &self.profiles {
            out.push_str(&format!(" {p} |"));
        }
        out.push('\n');
        out
    }
}
