// SPDX-License-Identifier: Apache-2.0

//! Mining toggle events out of a git repository's first-parent history.

pub mod diff;
pub mod git;
pub mod lifecycle;
pub mod presets;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Action, EventLedger, MinedRange, ToggleEvent};
use crate::timefmt::{format_instant, Instant};

pub use diff::{extract_declaration_events, DeclarationMatcher};
pub use git::{CommitInfo, GitRepo};
pub use lifecycle::{extract_file_lifecycle_events, FileChange, ToggleFileFilter};

/// Default events-per-commit threshold for bulk annotation.
pub const DEFAULT_BULK_THRESHOLD: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractorMode {
    /// Regex matches on `+`/`-` lines of the unified diff.
    #[serde(alias = "declaration-pattern")]
    Declaration,
    /// Creation and deletion of toggle definition files.
    #[serde(alias = "file")]
    FileLifecycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub mode: ExtractorMode,
    /// Repository-relative globs; empty means the whole tree.
    #[serde(default)]
    pub watch_paths: Vec<String>,
    #[serde(default)]
    pub declaration_patterns: Vec<String>,
    #[serde(default)]
    pub file_name_filter: String,
    #[serde(default = "default_branch")]
    pub branch: String,
}

fn default_branch() -> String {
    "HEAD".to_string()
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    fn compile(&self) -> Result<Extractor> {
        if self.branch.trim().is_empty() {
            return Err(Error::config("branch must not be empty"));
        }
        match self.mode {
            ExtractorMode::Declaration => Ok(Extractor::Declaration(DeclarationMatcher::new(
                &self.declaration_patterns,
            )?)),
            ExtractorMode::FileLifecycle => Ok(Extractor::Files(ToggleFileFilter::new(&self.file_name_filter)?)),
        }
    }

    fn pathspecs(&self) -> Vec<String> {
        self.watch_paths.iter().map(|p| format!(":(glob){p}")).collect()
    }
}

enum Extractor {
    Declaration(DeclarationMatcher),
    Files(ToggleFileFilter),
}

/// A mined ledger plus what happened while producing it.
#[derive(Debug, Clone)]
pub struct MiningOutcome {
    pub ledger: EventLedger,
    pub commits_walked: usize,
    pub commits_diffed: usize,
    pub warnings: Vec<String>,
}

/// Walks the first-parent history of `config.branch` and extracts toggle events.
///
/// Commits outside `[since, until]` (committer time) are skipped. A commit
/// whose diff can not be produced is reported as a warning and skipped.
pub fn mine_repository(
    repo_location: &Path,
    config: &ExtractorConfig,
    since: Option<Instant>,
    until: Option<Instant>,
) -> Result<MiningOutcome> {
    if let (Some(s), Some(u)) = (since, until) {
        if u < s {
            return Err(Error::config(format!(
                "--until ({}) is before --since ({})",
                format_instant(&u),
                format_instant(&s)
            )));
        }
    }
    let extractor = config.compile()?;
    let repo = GitRepo::open(repo_location)?;
    let tip = repo.resolve_commit(&config.branch)?;
    let label = repo_location
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| repo_location.display().to_string());

    let walked: Vec<CommitInfo> = repo
        .first_parent_history(&tip)?
        .into_iter()
        .filter(|c| since.is_none_or(|s| c.time >= s) && until.is_none_or(|u| c.time <= u))
        .collect();

    let pathspecs = config.pathspecs();
    let candidates: Vec<&CommitInfo> = if pathspecs.is_empty() {
        walked.iter().collect()
    } else {
        let touching = repo.commits_touching(&tip, &pathspecs)?;
        walked.iter().filter(|c| touching.contains(&c.id)).collect()
    };

    let per_commit: Vec<(Vec<ToggleEvent>, Vec<String>)> = candidates
        .par_iter()
        .map(|commit| extract_commit(&repo, commit, &extractor, &pathspecs))
        .collect();

    let mut events = Vec::new();
    let mut warnings = Vec::new();
    for (evs, warns) in per_commit {
        events.extend(evs);
        warnings.extend(warns);
    }

    let mined_range = walked.iter().map(|c| c.time).fold(None, |acc: Option<MinedRange>, t| {
        Some(match acc {
            None => MinedRange { first: t, last: t },
            Some(r) => MinedRange {
                first: r.first.min(t),
                last: r.last.max(t),
            },
        })
    });
    let ledger = EventLedger::new(label, events, mined_range)?;
    Ok(MiningOutcome {
        ledger,
        commits_walked: walked.len(),
        commits_diffed: candidates.len(),
        warnings,
    })
}

fn extract_commit(
    repo: &GitRepo,
    commit: &CommitInfo,
    extractor: &Extractor,
    pathspecs: &[String],
) -> (Vec<ToggleEvent>, Vec<String>) {
    let short = &commit.id[..commit.id.len().min(12)];
    let to_event = |name: String, action: Action, path: String| {
        ToggleEvent::new(name, action, commit.id.clone(), commit.time, path)
    };
    match extractor {
        Extractor::Declaration(matcher) => match repo.patch(commit, pathspecs) {
            Ok(text) => {
                let (hits, warns) = diff::scan_declarations(&text, matcher);
                (
                    hits.into_iter()
                        .map(|h| to_event(h.toggle_name, h.action, h.path))
                        .collect(),
                    warns.into_iter().map(|w| format!("commit {short}: {w}")).collect(),
                )
            }
            Err(e) => (Vec::new(), vec![format!("commit {short} skipped: {e}")]),
        },
        Extractor::Files(filter) => match repo.file_changes(commit, pathspecs) {
            Ok(changes) => (
                lifecycle::scan_file_changes(&changes, filter)
                    .into_iter()
                    .map(|h| to_event(h.toggle_name, h.action, h.path))
                    .collect(),
                Vec::new(),
            ),
            Err(e) => (Vec::new(), vec![format!("commit {short} skipped: {e}")]),
        },
    }
}

/// A commit carrying at least the bulk threshold of toggle events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BulkCommit {
    pub commit_id: String,
    #[serde(with = "crate::timefmt::serde_instant")]
    pub timestamp: Instant,
    pub add_count: usize,
    pub remove_count: usize,
}

impl BulkCommit {
    pub fn total(&self) -> usize {
        self.add_count + self.remove_count
    }
}

/// Commits with `add_count + remove_count >= threshold`, oldest first.
pub fn detect_bulk_events(ledger: &EventLedger, threshold: usize) -> Result<Vec<BulkCommit>> {
    if threshold == 0 {
        return Err(Error::config("bulk threshold must be at least 1"));
    }
    let mut per_commit: BTreeMap<(Instant, &str), (usize, usize)> = BTreeMap::new();
    for ev in ledger.events() {
        let slot = per_commit.entry((ev.timestamp, ev.commit_id.as_str())).or_default();
        match ev.action {
            Action::Added => slot.0 += 1,
            Action::Removed => slot.1 += 1,
        }
    }
    Ok(per_commit
        .into_iter()
        .filter(|(_, (a, r))| a + r >= threshold)
        .map(|((timestamp, commit), (add_count, remove_count))| BulkCommit {
            commit_id: commit.to_string(),
            timestamp,
            add_count,
            remove_count,
        })
        .collect())
}
