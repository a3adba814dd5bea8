// SPDX-License-Identifier: Apache-2.0

//! Run configuration.
//!
//! Configuration files are flat TOML key/value documents:
//!
//! | key                    | meaning                                              |
//! |------------------------|------------------------------------------------------|
//! | `project_name`         | label used in reports and community rows             |
//! | `repo`                 | path to a local clone (relative to the config file)  |
//! | `branch`               | revision whose first-parent history is walked        |
//! | `mode`                 | `declaration` or `file-lifecycle`                    |
//! | `watch_paths`          | list of path globs restricting the diff              |
//! | `declaration_patterns` | regexes with one capture group (declaration mode)    |
//! | `file_name_filter`     | glob on file names (file-lifecycle mode)             |
//! | `since`, `until`       | ISO-8601 bounds on committer time                    |
//! | `analysis_months`      | analysis period in months                            |
//! | `lines_of_code`        | codebase size at the snapshot                        |
//! | `release_cycle_days`   | average release cycle in days                        |
//! | `snapshot_time`        | censoring instant (defaults to the last mined commit)|
//! | `snapshot_date`        | date stamped on community rows                       |
//! | `refactor_policy`      | `coalesce` or `raw`                                  |
//! | `include_anomalous`    | keep negative lifespans in survival analysis         |
//! | `bulk_threshold`       | events per commit that count as a bulk change        |
//! | `output_dir`           | where artifacts are written                          |
//!
//! Layers are merged key by key: preset, then file, then command-line flags.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{ProjectContext, RefactorPolicy};
use crate::miner::presets::Preset;
use crate::miner::{ExtractorConfig, ExtractorMode, DEFAULT_BULK_THRESHOLD};
use crate::timefmt::{parse_instant, Instant};

/// One configuration layer; every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub project_name: Option<String>,
    pub repo: Option<PathBuf>,
    pub branch: Option<String>,
    pub mode: Option<ExtractorMode>,
    pub watch_paths: Option<Vec<String>>,
    pub declaration_patterns: Option<Vec<String>>,
    pub file_name_filter: Option<String>,
    pub since: Option<String>,
    pub until: Option<String>,
    pub analysis_months: Option<f64>,
    pub lines_of_code: Option<u64>,
    pub release_cycle_days: Option<f64>,
    pub snapshot_time: Option<String>,
    pub snapshot_date: Option<String>,
    pub refactor_policy: Option<RefactorPolicy>,
    pub include_anomalous: Option<bool>,
    pub bulk_threshold: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Reads a config file; a relative `repo` is resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut layer = Self::from_toml(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        if let (Some(repo), Some(dir)) = (layer.repo.as_mut(), path.parent()) {
            if repo.is_relative() {
                *repo = dir.join(&*repo);
            }
        }
        Ok(layer)
    }

    pub fn from_preset(preset: Preset) -> Self {
        Self::from_toml(preset.config_toml()).expect("shipped presets parse")
    }

    /// Keys set in `top` replace those in `self`.
    pub fn merged(mut self, top: ConfigLayer) -> Self {
        overlay!(self, top;
            project_name, repo, branch, mode, watch_paths, declaration_patterns,
            file_name_filter, since, until, analysis_months, lines_of_code,
            release_cycle_days, snapshot_time, snapshot_date, refactor_policy,
            include_anomalous, bulk_threshold, output_dir,
        );
        self
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let extractor = match self.mode {
            Some(mode) => Some(ExtractorConfig {
                mode,
                watch_paths: self.watch_paths.unwrap_or_default(),
                declaration_patterns: self.declaration_patterns.unwrap_or_default(),
                file_name_filter: self.file_name_filter.unwrap_or_default(),
                branch: self.branch.unwrap_or_else(|| "HEAD".to_string()),
            }),
            None => None,
        };
        if let Some(x) = &extractor {
            x.validate()?;
        }
        let since = self.since.as_deref().map(parse_instant).transpose()?;
        let until = self.until.as_deref().map(parse_instant).transpose()?;
        if let (Some(s), Some(u)) = (since, until) {
            if u < s {
                return Err(Error::config("`until` is before `since`"));
            }
        }
        let snapshot_date = self
            .snapshot_date
            .as_deref()
            .map(|d| {
                NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
                    .map_err(|_| Error::config(format!("snapshot_date `{d}` is not YYYY-MM-DD")))
            })
            .transpose()?;
        let bulk_threshold = self.bulk_threshold.unwrap_or(DEFAULT_BULK_THRESHOLD);
        if bulk_threshold == 0 {
            return Err(Error::config("bulk_threshold must be at least 1"));
        }
        Ok(RunConfig {
            project: ProjectSettings {
                project_name: self.project_name.unwrap_or_else(|| "project".to_string()),
                analysis_months: self.analysis_months,
                lines_of_code: self.lines_of_code,
                release_cycle_days: self.release_cycle_days,
                snapshot_time: self.snapshot_time.as_deref().map(parse_instant).transpose()?,
                snapshot_date,
            },
            repo: self.repo,
            extractor,
            since,
            until,
            policies: Policies {
                refactor_policy: self.refactor_policy.unwrap_or_default(),
                include_anomalous: self.include_anomalous.unwrap_or(false),
                bulk_threshold,
            },
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("togglescope-out")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectSettings {
    pub project_name: String,
    pub analysis_months: Option<f64>,
    pub lines_of_code: Option<u64>,
    pub release_cycle_days: Option<f64>,
    pub snapshot_time: Option<Instant>,
    pub snapshot_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Policies {
    pub refactor_policy: RefactorPolicy,
    pub include_anomalous: bool,
    pub bulk_threshold: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub project: ProjectSettings,
    pub repo: Option<PathBuf>,
    pub extractor: Option<ExtractorConfig>,
    pub since: Option<Instant>,
    pub until: Option<Instant>,
    pub policies: Policies,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn extractor(&self) -> Result<&ExtractorConfig> {
        self.extractor
            .as_ref()
            .ok_or_else(|| Error::config("no extractor `mode` configured (use --preset or a config file)"))
    }

    pub fn repo(&self) -> Result<&Path> {
        self.repo
            .as_deref()
            .ok_or_else(|| Error::config("no repository configured (use --repo)"))
    }

    /// Project context, with `fallback_snapshot` used when none is configured.
    pub fn project_context(&self, fallback_snapshot: Option<Instant>) -> Result<ProjectContext> {
        let p = &self.project;
        let missing = |key: &str| Error::config(format!("`{key}` is required for reporting"));
        let ctx = ProjectContext {
            project_name: p.project_name.clone(),
            analysis_months: p.analysis_months.ok_or_else(|| missing("analysis_months"))?,
            lines_of_code: p.lines_of_code.ok_or_else(|| missing("lines_of_code"))?,
            release_cycle_days: p.release_cycle_days.ok_or_else(|| missing("release_cycle_days"))?,
            snapshot_time: p
                .snapshot_time
                .or(fallback_snapshot)
                .ok_or_else(|| missing("snapshot_time"))?,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    /// Date stamped on community CSV rows.
    pub fn snapshot_date(&self, ctx: &ProjectContext) -> NaiveDate {
        self.project
            .snapshot_date
            .unwrap_or_else(|| ctx.snapshot_time.date_naive())
    }
}
