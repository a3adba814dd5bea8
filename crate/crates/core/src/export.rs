// SPDX-License-Identifier: Apache-2.0

//! Artifact files: atomic writes, the ledger sidecar, time-series CSV and
//! the community CSV.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{EventLedger, MinedRange};
use crate::metrics::{DailyActive, MetricValues, MonthlyCount};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const EVENTS_META_FILE: &str = "events.meta.json";

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Ledger metadata kept beside `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerMeta {
    pub repo_label: String,
    pub mined_range: Option<MinedRange>,
}

/// Writes `events.jsonl` and `events.meta.json` into `dir`.
pub fn write_ledger(dir: &Path, ledger: &EventLedger) -> Result<PathBuf> {
    let events_path = dir.join(EVENTS_FILE);
    write_atomic(&events_path, ledger.to_jsonl().as_bytes())?;
    let meta = LedgerMeta {
        repo_label: ledger.repo_label().to_string(),
        mined_range: ledger.mined_range(),
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    write_atomic(&dir.join(EVENTS_META_FILE), json.as_bytes())?;
    Ok(events_path)
}

/// Reads an events file; picks up `events.meta.json` from the same
/// directory when present, otherwise infers the range from the events.
pub fn read_ledger(events_path: &Path) -> Result<EventLedger> {
    let text = fs::read_to_string(events_path).map_err(|e| Error::io(events_path, e))?;
    let meta_path = events_path.with_file_name(EVENTS_META_FILE);
    let meta = if meta_path.is_file() {
        let raw = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        Some(serde_json::from_str::<LedgerMeta>(&raw)?)
    } else {
        None
    };
    let label = meta.as_ref().map(|m| m.repo_label.clone()).unwrap_or_else(|| {
        events_path
            .parent()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    EventLedger::from_jsonl(label, &text, meta.and_then(|m| m.mined_range)).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", events_path.display()),
            message,
        },
        other => other,
    })
}

/// Long-format CSV holding both the monthly and daily series:
/// `series,period,additions,removals,active`.
pub fn timeseries_csv(monthly: &[MonthlyCount], daily: &DailyActive) -> String {
    let mut out = String::from("series,period,additions,removals,active\n");
    for m in monthly {
        out.push_str(&format!("monthly,{},{},{},\n", m.month, m.additions, m.removals));
    }
    for (day, active) in &daily.points {
        out.push_str(&format!("daily,{},,,{}\n", day.format("%Y-%m-%d"), active));
    }
    out
}

pub const COMMUNITY_HEADER: [&str; 7] = [
    "project",
    "churn_rate",
    "net_accumulation",
    "cleanup_ratio",
    "toggle_density",
    "normalized_lifespan",
    "snapshot_date",
];

/// One community benchmark row.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityRow {
    pub project: String,
    pub values: MetricValues,
    pub snapshot_date: NaiveDate,
}

impl CommunityRow {
    fn fields(&self) -> Vec<String> {
        let v = &self.values;
        let num = |x: Option<f64>| x.map(|x| format!("{x}")).unwrap_or_default();
        vec![
            self.project.clone(),
            num(v.churn_rate),
            num(v.net_accumulation),
            num(v.cleanup_ratio),
            num(v.toggle_density),
            num(v.normalized_lifespan),
            self.snapshot_date.format("%Y-%m-%d").to_string(),
        ]
    }
}

/// Appends rows to the community CSV, writing the header only when the
/// file is new or empty. Existing content is never rewritten.
pub fn append_community_rows(path: &Path, rows: &[CommunityRow]) -> Result<()> {
    let needs_header = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if needs_header {
        writer.write_record(COMMUNITY_HEADER)?;
    }
    for row in rows {
        writer.write_record(row.fields())?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Parses community CSV text; rows that fail to parse are reported, not fatal.
pub fn parse_community_csv(text: &str) -> (Vec<CommunityRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("row {line}: {e}"));
                continue;
            }
        };
        if record.len() != COMMUNITY_HEADER.len() {
            problems.push(format!("row {line}: expected 7 fields, found {}", record.len()));
            continue;
        }
        let mut nums = Vec::with_capacity(5);
        let mut bad = None;
        for field in record.iter().skip(1).take(5) {
            let field = field.trim();
            if field.is_empty() {
                nums.push(None);
            } else {
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => nums.push(Some(v)),
                    _ => bad = Some(field.to_string()),
                }
            }
        }
        if let Some(field) = bad {
            problems.push(format!("row {line}: `{field}` is not a number"));
            continue;
        }
        let Ok(date) = NaiveDate::parse_from_str(record[6].trim(), "%Y-%m-%d") else {
            problems.push(format!("row {line}: bad snapshot_date `{}`", &record[6]));
            continue;
        };
        rows.push(CommunityRow {
            project: record[0].to_string(),
            values: MetricValues::from_slice(&nums),
            snapshot_date: date,
        });
    }
    (rows, problems)
}
