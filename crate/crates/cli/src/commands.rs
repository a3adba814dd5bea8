// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use serde::Deserialize;
use serde_json::json;
use togglescope::config::ConfigLayer;
use togglescope::export::{append_community_rows, read_ledger, write_atomic, write_ledger, CommunityRow, EVENTS_FILE};
use togglescope::miner::detect_bulk_events;
use togglescope::miner::presets::Preset;
use togglescope::timefmt::format_instant;
use togglescope::{
    analyze, assess_project, compare_projects, golden_grid, Action, Error, EventLedger, MetricValues, ProfileRule,
    Result, RunConfig, ThresholdTable,
};

use crate::GlobalOpts;

/// Preset, then config file, then flags.
fn run_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut layer = ConfigLayer::default();
    if let Some(name) = &g.preset {
        let preset = Preset::from_name(name).ok_or_else(|| Error::config(format!("unknown preset `{name}`")))?;
        layer = ConfigLayer::from_preset(preset);
    }
    if let Some(path) = &g.config {
        layer = layer.merged(ConfigLayer::from_file(path)?);
    }
    let flags = ConfigLayer {
        project_name: g.project_name.clone(),
        repo: g.repo.clone(),
        branch: g.branch.clone(),
        since: g.since.clone(),
        until: g.until.clone(),
        analysis_months: g.analysis_months,
        lines_of_code: g.lines_of_code,
        release_cycle_days: g.release_cycle_days,
        snapshot_time: g.snapshot_time.clone(),
        snapshot_date: g.snapshot_date.clone(),
        refactor_policy: g.refactor_policy,
        include_anomalous: g.include_anomalous.then_some(true),
        bulk_threshold: g.bulk_threshold,
        output_dir: g.out.clone(),
        ..ConfigLayer::default()
    };
    layer.merged(flags).resolve()
}

fn load_thresholds(g: &GlobalOpts) -> Result<ThresholdTable> {
    match &g.thresholds {
        Some(path) => ThresholdTable::load(path),
        None => Ok(togglescope::default_thresholds()),
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn mine(g: &GlobalOpts) -> Result<PathBuf> {
    let cfg = run_config(g)?;
    let extractor = cfg.extractor()?;
    let repo = cfg.repo()?;
    let outcome = togglescope::mine_repository(repo, extractor, cfg.since, cfg.until)?;
    let ledger = &outcome.ledger;
    let bulk = detect_bulk_events(ledger, cfg.policies.bulk_threshold)?;
    let path = write_ledger(&cfg.output_dir, ledger)?;

    let additions = ledger.count(Action::Added);
    let removals = ledger.count(Action::Removed);
    if g.json {
        print_json(&json!({
            "events_path": path,
            "events": ledger.len(),
            "additions": additions,
            "removals": removals,
            "commits_walked": outcome.commits_walked,
            "commits_diffed": outcome.commits_diffed,
            "mined_range": ledger.mined_range(),
            "bulk_threshold": cfg.policies.bulk_threshold,
            "bulk_commits": bulk,
            "warnings": outcome.warnings,
        }))?;
    } else {
        println!(
            "mined {} events ({additions} additions, {removals} removals) from {} commits ({} diffed)",
            ledger.len(),
            outcome.commits_walked,
            outcome.commits_diffed
        );
        if let Some(r) = ledger.mined_range() {
            println!("range: {} .. {}", format_instant(&r.first), format_instant(&r.last));
        }
        if !bulk.is_empty() {
            println!("bulk commits (>= {} events):", cfg.policies.bulk_threshold);
            for b in &bulk {
                println!(
                    "  {} {} +{} -{}",
                    &b.commit_id[..b.commit_id.len().min(12)],
                    format_instant(&b.timestamp),
                    b.add_count,
                    b.remove_count
                );
            }
        }
        if !outcome.warnings.is_empty() {
            println!("warnings:");
            for w in &outcome.warnings {
                println!("  - {w}");
            }
        }
        println!("wrote {}", path.display());
    }
    Ok(path)
}

fn report_from(g: &GlobalOpts, cfg: &RunConfig, ledger: &EventLedger) -> Result<()> {
    let fallback = ledger.mined_range().map(|r| r.last).or_else(|| {
        cfg.project.snapshot_time.is_none().then(|| {
            log::warn!("no snapshot_time and no mined range; censoring at the current time");
            Utc::now()
        })
    });
    let ctx = cfg.project_context(fallback)?;
    let analysis = analyze(
        ledger,
        ctx,
        &cfg.policies,
        &load_thresholds(g)?,
        &ProfileRule::default(),
    )?;
    let written = analysis.write_artifacts(&cfg.output_dir)?;

    if g.json {
        print_json(&json!({
            "artifacts": written,
            "metrics": analysis.metrics,
            "assessment": analysis.assessment,
            "warnings": analysis.warnings,
        }))?;
    } else {
        print!("{}", analysis.assessment.to_text());
        for w in &analysis.warnings {
            println!("warning: {w}");
        }
        for p in &written {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

pub fn report(g: &GlobalOpts, events: Option<PathBuf>) -> Result<()> {
    let cfg = run_config(g)?;
    let events = events.unwrap_or_else(|| cfg.output_dir.join(EVENTS_FILE));
    let ledger = read_ledger(&events)?;
    report_from(g, &cfg, &ledger)
}

pub fn run(g: &GlobalOpts) -> Result<()> {
    let cfg = run_config(g)?;
    let quiet = GlobalOpts {
        json: false,
        ..g.clone()
    };
    let path = if g.json {
        // Keep stdout a single JSON document.
        let outcome = togglescope::mine_repository(cfg.repo()?, cfg.extractor()?, cfg.since, cfg.until)?;
        write_ledger(&cfg.output_dir, &outcome.ledger)?
    } else {
        mine(&quiet)?
    };
    let ledger = read_ledger(&path)?;
    report_from(g, &cfg, &ledger)
}

/// Lenient view of a metrics file: the five values plus optional labels.
#[derive(Debug, Deserialize)]
struct MetricsFile {
    project: Option<String>,
    #[serde(flatten)]
    values: MetricValues,
    snapshot_date: Option<String>,
}

fn read_metrics(path: &Path) -> Result<MetricsFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

fn project_label(file: &MetricsFile, path: &Path) -> String {
    file.project.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".to_string())
    })
}

/// Parses positional metric values; `-`, `n/a` and `na` mean missing.
pub fn parse_values(raw: &[String]) -> Result<MetricValues> {
    if raw.len() > 5 {
        return Err(Error::config(format!(
            "expected at most five values, got {}",
            raw.len()
        )));
    }
    let mut out = Vec::with_capacity(5);
    for s in raw {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "-" | "n/a" | "na") {
            out.push(None);
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(Some(v)),
            _ => return Err(Error::config(format!("`{s}` is not a number"))),
        }
    }
    Ok(MetricValues::from_slice(&out))
}

pub fn assess(g: &GlobalOpts, metrics: Option<PathBuf>, values: &[String]) -> Result<()> {
    let table = load_thresholds(g)?;
    let (name, values) = match metrics {
        Some(path) => {
            let file = read_metrics(&path)?;
            (project_label(&file, &path), file.values)
        }
        None if values.is_empty() => {
            return Err(Error::config("give five metric values or --metrics PATH"));
        }
        None => (
            g.project_name.clone().unwrap_or_else(|| "project".to_string()),
            parse_values(values)?,
        ),
    };
    let assessment = assess_project(&name, &values, &table, &ProfileRule::default());
    if g.json {
        print_json(&serde_json::to_value(&assessment)?)
    } else {
        print!("{}", assessment.to_text());
        Ok(())
    }
}

pub fn export_community(g: &GlobalOpts, metrics: &[PathBuf], csv: Option<PathBuf>) -> Result<()> {
    let cfg = run_config(g)?;
    let override_date = cfg.project.snapshot_date;
    let mut rows = Vec::with_capacity(metrics.len());
    for path in metrics {
        let file = read_metrics(path)?;
        let date = match (override_date, file.snapshot_date.as_deref()) {
            (Some(d), _) => d,
            (None, Some(s)) => NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
                .map_err(|_| Error::config(format!("{}: snapshot_date `{s}` is not YYYY-MM-DD", path.display())))?,
            (None, None) => {
                return Err(Error::config(format!(
                    "{}: no snapshot_date (use --snapshot-date)",
                    path.display()
                )))
            }
        };
        rows.push(CommunityRow {
            project: project_label(&file, path),
            values: file.values,
            snapshot_date: date,
        });
    }
    let csv = csv.unwrap_or_else(|| cfg.output_dir.join("community.csv"));
    append_community_rows(&csv, &rows)?;
    if g.json {
        print_json(&json!({ "csv": csv, "rows_appended": rows.len() }))
    } else {
        println!("appended {} row(s) to {}", rows.len(), csv.display());
        Ok(())
    }
}

pub fn compare(g: &GlobalOpts, metrics: &[PathBuf]) -> Result<()> {
    let table = load_thresholds(g)?;
    let rule = ProfileRule::default();
    let mut assessments = Vec::with_capacity(metrics.len());
    for path in metrics {
        let file = read_metrics(path)?;
        assessments.push(assess_project(&project_label(&file, path), &file.values, &table, &rule));
    }
    let cmp = compare_projects(&assessments)?;
    if g.json {
        print_json(&serde_json::to_value(&cmp)?)
    } else {
        print!("{}", cmp.to_markdown());
        Ok(())
    }
}

fn emit(output: Option<PathBuf>, body: &str) -> Result<()> {
    match output {
        Some(path) => write_atomic(&path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

pub fn thresholds(g: &GlobalOpts, output: Option<PathBuf>) -> Result<()> {
    emit(output, &load_thresholds(g)?.to_json_pretty())
}

pub fn grid(g: &GlobalOpts, min: usize, output: Option<PathBuf>) -> Result<()> {
    let table = load_thresholds(g)?;
    let rule = ProfileRule::default();
    let cases: Vec<_> = golden_grid(&table, min)
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            let a = assess_project(&format!("grid-{i:03}"), &values, &table, &rule);
            json!({
                "values": values,
                "zones": a.metrics.iter().map(|m| (m.metric.key().to_string(), json!(m.zone.label())))
                    .collect::<serde_json::Map<_, _>>(),
                "profile": a.profile,
            })
        })
        .collect();
    let mut body = serde_json::to_string_pretty(&cases)?;
    body.push('\n');
    emit(output, &body)
}
