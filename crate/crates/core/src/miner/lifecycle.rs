// SPDX-License-Identifier: Apache-2.0

//! Toggle events from file creation, deletion and renames.

use std::path::Path;

use globset::{Glob, GlobMatcher};

use crate::error::{Error, Result};
use crate::ledger::Action;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileChange {
    Added(String),
    Deleted(String),
    Renamed { from: String, to: String },
}

/// Matches toggle files by name (or by full path when the glob has a `/`).
#[derive(Debug, Clone)]
pub struct ToggleFileFilter {
    matcher: GlobMatcher,
    match_full_path: bool,
}

impl ToggleFileFilter {
    pub fn new(glob: &str) -> Result<Self> {
        if glob.trim().is_empty() {
            return Err(Error::config(
                "file lifecycle mode requires a non-empty file_name_filter",
            ));
        }
        let matcher = Glob::new(glob)
            .map_err(|e| Error::config(format!("invalid file_name_filter `{glob}`: {e}")))?
            .compile_matcher();
        Ok(ToggleFileFilter {
            matcher,
            match_full_path: glob.contains('/'),
        })
    }

    pub fn matches(&self, path: &str) -> bool {
        if self.match_full_path {
            self.matcher.is_match(path)
        } else {
            let name = path.rsplit('/').next().unwrap_or(path);
            self.matcher.is_match(name)
        }
    }
}

pub fn file_stem(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// A lifecycle event together with the path that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileHit {
    pub toggle_name: String,
    pub action: Action,
    pub path: String,
}

pub fn scan_file_changes(changes: &[FileChange], filter: &ToggleFileFilter) -> Vec<FileHit> {
    let mut hits = Vec::new();
    let mut push = |path: &str, action| {
        let stem = file_stem(path);
        if !stem.is_empty() {
            hits.push(FileHit {
                toggle_name: stem,
                action,
                path: path.to_string(),
            });
        }
    };
    for change in changes {
        match change {
            FileChange::Added(p) if filter.matches(p) => push(p, Action::Added),
            FileChange::Deleted(p) if filter.matches(p) => push(p, Action::Removed),
            FileChange::Renamed { from, to } => {
                let from_ok = filter.matches(from);
                let to_ok = filter.matches(to);
                if from_ok && to_ok && file_stem(from) == file_stem(to) {
                    continue;
                }
                if from_ok {
                    push(from, Action::Removed);
                }
                if to_ok {
                    push(to, Action::Added);
                }
            }
            _ => {}
        }
    }
    hits
}

/// `(toggle_name, action)` pairs implied by one commit's file changes.
pub fn extract_file_lifecycle_events(changes: &[FileChange], filter: &str) -> Result<Vec<(String, Action)>> {
    let filter = ToggleFileFilter::new(filter)?;
    Ok(scan_file_changes(changes, &filter)
        .into_iter()
        .map(|h| (h.toggle_name, h.action))
        .collect())
}
