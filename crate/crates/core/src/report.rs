// SPDX-License-Identifier: Apache-2.0

//! End-to-end analysis of one ledger and the artifacts written from it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::assessment::{assess_project, format_value, Assessment, MetricId, ProfileRule, ThresholdTable, ZoneResult};
use crate::config::Policies;
use crate::error::Result;
use crate::export::{timeseries_csv, write_atomic};
use crate::ledger::{build_records, EventLedger, ProjectContext, RecordSet, ToggleRecord};
use crate::metrics::{
    active_series, inferred_analysis_months, monthly_series, period_divergence_warning, DailyActive, MetricSet,
    MonthlyCount,
};
use crate::miner::{detect_bulk_events, BulkCommit};
use crate::survival::{
    classify_tiers, flag_permanent, kaplan_meier, median_survival, PermanentScan, SurvivalCurve, Tiering,
};
use crate::timefmt::format_instant;

pub const METRICS_FILE: &str = "metrics.json";
pub const SURVIVAL_FILE: &str = "survival.csv";
pub const RECORDS_FILE: &str = "records.json";
pub const TIERS_FILE: &str = "tiers.json";
pub const PERMANENT_FILE: &str = "permanent.json";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const REPORT_FILE: &str = "report.md";

/// Everything computed for one project.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub context: ProjectContext,
    pub policies: Policies,
    pub records: RecordSet,
    pub curve: SurvivalCurve,
    pub metrics: MetricSet,
    pub tiering: Tiering,
    pub permanent: PermanentScan,
    pub bulk: Vec<BulkCommit>,
    pub monthly: Vec<MonthlyCount>,
    pub daily: DailyActive,
    pub assessment: Assessment,
    /// Data-quality warnings, in the order they were raised.
    pub warnings: Vec<String>,
}

/// Runs the full pipeline over `ledger`. Censoring happens at
/// `ctx.snapshot_time`.
pub fn analyze(
    ledger: &EventLedger,
    ctx: ProjectContext,
    policies: &Policies,
    thresholds: &ThresholdTable,
    rule: &ProfileRule,
) -> Result<Analysis> {
    ctx.validate()?;
    thresholds.validate()?;
    let records = build_records(ledger, policies.refactor_policy);
    let snapshot = ctx.snapshot_time;
    let curve = kaplan_meier(&records.records, &snapshot, policies.include_anomalous)?;
    let median = median_survival(&curve);

    let metrics = if ledger.is_empty() {
        MetricSet::without_events(&ctx)?
    } else {
        MetricSet::compute(
            &ctx,
            records.additions as u64,
            records.removals as u64,
            records.active_count() as u64,
            median,
        )?
    };

    let mut warnings = records.warnings.clone();
    if let Some(w) = period_divergence_warning(ctx.analysis_months, inferred_analysis_months(ledger)) {
        warnings.push(w);
    }
    let daily = active_series(ledger, Some(snapshot.date_naive()));
    warnings.extend(daily.warnings.iter().cloned());

    let mut tiering = classify_tiers(&records.records, policies.include_anomalous);
    let permanent = flag_permanent(&records.records, &snapshot);
    if let Tiering::Classified(tiers) = &mut tiering {
        tiers.permanent = permanent.flagged.clone();
    }

    let bulk = detect_bulk_events(ledger, policies.bulk_threshold)?;
    let assessment = assess_project(&ctx.project_name, &metrics.values(), thresholds, rule);

    Ok(Analysis {
        monthly: monthly_series(ledger),
        context: ctx,
        policies: *policies,
        records,
        curve,
        metrics,
        tiering,
        permanent,
        bulk,
        daily,
        assessment,
        warnings,
    })
}

#[derive(Serialize)]
struct TierCounts {
    temporary: usize,
    intermediate: usize,
    long_lived: usize,
    permanent: usize,
}

#[derive(Serialize)]
struct TiersDoc<'a> {
    status: &'static str,
    q1_days: Option<f64>,
    q3_days: Option<f64>,
    counts: TierCounts,
    temporary: &'a [ToggleRecord],
    intermediate: &'a [ToggleRecord],
    long_lived: &'a [ToggleRecord],
}

#[derive(Serialize)]
struct PermanentEntry {
    toggle: String,
    added_at: String,
    age_days: f64,
    excess_days: f64,
}

#[derive(Serialize)]
struct PermanentDoc {
    status: &'static str,
    threshold_days: Option<f64>,
    toggles: Vec<PermanentEntry>,
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

impl Analysis {
    pub fn metrics_json(&self) -> Result<String> {
        pretty(&self.metrics)
    }

    pub fn records_json(&self) -> Result<String> {
        pretty(&self.records.records)
    }

    pub fn tiers_json(&self) -> Result<String> {
        let empty: &[ToggleRecord] = &[];
        let doc = match &self.tiering {
            Tiering::Classified(t) => TiersDoc {
                status: "classified",
                q1_days: Some(t.q1_days),
                q3_days: Some(t.q3_days),
                counts: TierCounts {
                    temporary: t.temporary.len(),
                    intermediate: t.intermediate.len(),
                    long_lived: t.long_lived.len(),
                    permanent: t.permanent.len(),
                },
                temporary: &t.temporary,
                intermediate: &t.intermediate,
                long_lived: &t.long_lived,
            },
            Tiering::NoRemovals => TiersDoc {
                status: "no_removals",
                q1_days: None,
                q3_days: None,
                counts: TierCounts {
                    temporary: 0,
                    intermediate: 0,
                    long_lived: 0,
                    permanent: 0,
                },
                temporary: empty,
                intermediate: empty,
                long_lived: empty,
            },
        };
        pretty(&doc)
    }

    pub fn permanent_json(&self) -> Result<String> {
        let doc = PermanentDoc {
            status: if self.permanent.threshold_days.is_some() {
                "ok"
            } else {
                "threshold_undefined"
            },
            threshold_days: self.permanent.threshold_days,
            toggles: self
                .permanent
                .flagged
                .iter()
                .map(|p| PermanentEntry {
                    toggle: p.record.label(),
                    added_at: format_instant(&p.record.added_at),
                    age_days: p.age_days,
                    excess_days: p.excess_days,
                })
                .collect(),
        };
        pretty(&doc)
    }

    pub fn timeseries_csv(&self) -> String {
        timeseries_csv(&self.monthly, &self.daily)
    }

    /// Markdown report. Deterministic for a given ledger and configuration.
    pub fn markdown(&self) -> String {
        let ctx = &self.context;
        let m = &self.metrics;
        let mut out = String::new();
        let _ = writeln!(out, "# Toggle report: {}\n", ctx.project_name);
        let _ = writeln!(out, "- Snapshot: {}", format_instant(&ctx.snapshot_time));
        let _ = writeln!(out, "- Analysis period: {} months", format_value(ctx.analysis_months));
        let _ = writeln!(out, "- Lines of code: {}", ctx.lines_of_code);
        let _ = writeln!(out, "- Release cycle: {} days", format_value(ctx.release_cycle_days));
        let _ = writeln!(
            out,
            "- Events: {} additions, {} removals ({} orphan removals, {} same-commit modifications)",
            self.records.additions, self.records.removals, self.records.orphan_removals, self.records.coalesced_pairs
        );
        let _ = writeln!(
            out,
            "- Refactor policy: {}; anomalous lifespans {}",
            self.policies.refactor_policy,
            if self.policies.include_anomalous {
                "included"
            } else {
                "excluded"
            }
        );

        let _ = writeln!(out, "\n## Metrics\n");
        let _ = writeln!(out, "| Metric | Value | Unit | Zone |");
        let _ = writeln!(out, "|---|---|---|---|");
        for ma in &self.assessment.metrics {
            let value = match ma.value {
                Some(v) => format_value(v),
                None => format!("n/a ({})", m.note(field_name(ma.metric)).unwrap_or("undefined")),
            };
            let zone = match &ma.zone {
                ZoneResult::Zone { zone, .. } => zone.clone(),
                ZoneResult::NotAssessable { reason } => format!("not assessable: {reason}"),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                ma.metric.title(),
                value,
                ma.metric.unit(),
                zone
            );
        }
        let median = m
            .inputs
            .median_survival_days
            .map_or_else(|| "undefined".to_string(), |d| format!("{} days", format_value(d)));
        let _ = writeln!(
            out,
            "\nActive toggles: {}. Median survival (Kaplan-Meier): {}.",
            m.inputs.active_count, median
        );

        let _ = writeln!(out, "\n## Profile\n");
        let _ = writeln!(out, "**{}**: {}", self.assessment.profile, self.assessment.rationale);

        let _ = writeln!(out, "\n## Lifespan tiers\n");
        match &self.tiering {
            Tiering::Classified(t) => {
                let _ = writeln!(
                    out,
                    "Quartiles of removed lifespans: Q1 = {} days, Q3 = {} days.\n",
                    format_value(t.q1_days),
                    format_value(t.q3_days)
                );
                let _ = writeln!(out, "| Tier | Rule | Count |");
                let _ = writeln!(out, "|---|---|---|");
                let _ = writeln!(out, "| Temporary | lifespan < Q1 | {} |", t.temporary.len());
                let _ = writeln!(out, "| Intermediate | Q1 <= lifespan < Q3 | {} |", t.intermediate.len());
                let _ = writeln!(out, "| Long-lived | lifespan >= Q3 | {} |", t.long_lived.len());
                let _ = writeln!(
                    out,
                    "| Permanent (active) | age > longest removed lifespan | {} |",
                    t.permanent.len()
                );
            }
            Tiering::NoRemovals => {
                let _ = writeln!(out, "No removed toggles; tiers are undefined.");
            }
        }

        let _ = writeln!(out, "\n## Permanent toggles\n");
        match self.permanent.threshold_days {
            None => {
                let _ = writeln!(out, "Threshold undefined: no removed toggles.");
            }
            Some(th) if self.permanent.flagged.is_empty() => {
                let _ = writeln!(out, "None (threshold {} days).", format_value(th));
            }
            Some(th) => {
                let _ = writeln!(out, "Threshold: {} days.\n", format_value(th));
                let _ = writeln!(out, "| Toggle | Added | Age (days) | Excess (days) |");
                let _ = writeln!(out, "|---|---|---|---|");
                for p in &self.permanent.flagged {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {:.1} | {:.1} |",
                        p.record.label(),
                        format_instant(&p.record.added_at),
                        p.age_days,
                        p.excess_days
                    );
                }
            }
        }

        if !self.bulk.is_empty() {
            let _ = writeln!(out, "\n## Bulk commits\n");
            let _ = writeln!(
                out,
                "Commits with at least {} toggle events; these spikes may be migrations rather than \
                 ordinary churn.\n",
                self.policies.bulk_threshold
            );
            let _ = writeln!(out, "| Commit | Date | Added | Removed |");
            let _ = writeln!(out, "|---|---|---|---|");
            for b in &self.bulk {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    short(&b.commit_id),
                    format_instant(&b.timestamp),
                    b.add_count,
                    b.remove_count
                );
            }
        }

        if !self.warnings.is_empty() {
            let _ = writeln!(out, "\n## Warnings\n");
            for w in &self.warnings {
                let _ = writeln!(out, "- {w}");
            }
        }
        out
    }

    /// Writes every artifact into `dir` and returns their paths.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files: [(&str, String); 7] = [
            (METRICS_FILE, self.metrics_json()?),
            (SURVIVAL_FILE, self.curve.to_csv()),
            (RECORDS_FILE, self.records_json()?),
            (TIERS_FILE, self.tiers_json()?),
            (PERMANENT_FILE, self.permanent_json()?),
            (TIMESERIES_FILE, self.timeseries_csv()),
            (REPORT_FILE, self.markdown()),
        ];
        let mut written = Vec::with_capacity(files.len());
        for (name, body) in files {
            let path = dir.join(name);
            write_atomic(&path, body.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

fn field_name(id: MetricId) -> &'static str {
    match id {
        MetricId::Churn => "churn_rate",
        MetricId::NetAccumulation => "net_accumulation",
        MetricId::CleanupRatio => "cleanup_ratio",
        MetricId::Density => "toggle_density",
        MetricId::NormLifespan => "normalized_lifespan",
    }
}

fn short(id: &str) -> &str {
    &id[..id.len().min(12)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assessment::{default_thresholds, Profile};
    use crate::ledger::{Action, RefactorPolicy, ToggleEvent};
    use crate::timefmt::parse_instant;

    fn policies() -> Policies {
        Policies {
            refactor_policy: RefactorPolicy::Coalesce,
            include_anomalous: false,
            bulk_threshold: 20,
        }
    }

    fn ctx(snapshot: &str) -> ProjectContext {
        ProjectContext {
            project_name: "demo".into(),
            analysis_months: 12.0,
            lines_of_code: 100_000,
            release_cycle_days: 30.0,
            snapshot_time: parse_instant(snapshot).unwrap(),
        }
    }

    fn ev(name: &str, action: Action, commit: &str, at: &str) -> ToggleEvent {
        ToggleEvent::new(name, action, commit, parse_instant(at).unwrap(), "flags.go")
    }

    #[test]
    fn empty_ledger_reports_everything_undefined() {
        let a = analyze(
            &EventLedger::empty("demo"),
            ctx("2024-01-01"),
            &policies(),
            &default_thresholds(),
            &ProfileRule::default(),
        )
        .unwrap();
        assert_eq!(a.assessment.profile, Profile::Mixed);
        assert!(a.metrics.values().churn_rate.is_none());
        let md = a.markdown();
        assert!(md.contains("n/a (no toggle events in the ledger)"), "{md}");
        assert!(md.contains("No removed toggles"));
        assert_eq!(
            a.tiers_json().unwrap().lines().nth(1).unwrap().trim(),
            "\"status\": \"no_removals\","
        );
    }

    #[test]
    fn small_ledger_end_to_end() {
        let ledger = EventLedger::new(
            "demo",
            vec![
                ev("A", Action::Added, "c1", "2023-01-01"),
                ev("B", Action::Added, "c1", "2023-01-01"),
                ev("C", Action::Added, "c2", "2023-02-01"),
                ev("A", Action::Removed, "c3", "2023-03-02"),
                ev("B", Action::Removed, "c4", "2023-06-01"),
            ],
            None,
        )
        .unwrap();
        let a = analyze(
            &ledger,
            ctx("2023-12-31"),
            &policies(),
            &default_thresholds(),
            &ProfileRule::default(),
        )
        .unwrap();
        assert_eq!(a.metrics.inputs.additions_total, 3);
        assert_eq!(a.metrics.inputs.removals_total, 2);
        assert_eq!(a.metrics.inputs.active_count, 1);
        assert_eq!(a.metrics.churn_rate, Some(5.0 / 12.0));
        // C is active for 333 days, longer than B's 151.
        assert_eq!(a.permanent.flagged.len(), 1);
        assert_eq!(a.permanent.flagged[0].record.toggle_name, "C");
        // 5 months of events against 12 configured.
        assert!(a.warnings.iter().any(|w| w.contains("analysis period")));

        let dir = tempfile::tempdir().unwrap();
        let files = a.write_artifacts(dir.path()).unwrap();
        assert_eq!(files.len(), 7);
        let first: Vec<_> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        let again = analyze(
            &ledger,
            ctx("2023-12-31"),
            &policies(),
            &default_thresholds(),
            &ProfileRule::default(),
        )
        .unwrap();
        again.write_artifacts(dir.path()).unwrap();
        let second: Vec<_> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn toggles_added_after_snapshot_are_rejected() {
        let ledger = EventLedger::new("demo", vec![ev("A", Action::Added, "c1", "2024-05-01")], None).unwrap();
        let err = analyze(
            &ledger,
            ctx("2024-01-01"),
            &policies(),
            &default_thresholds(),
            &ProfileRule::default(),
        )
        .unwrap_err();
        assert!(err.is_config());
    }
}
