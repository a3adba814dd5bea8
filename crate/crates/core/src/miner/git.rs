// SPDX-License-Identifier: Apache-2.0

//! Thin wrapper over the `git` executable.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};
use crate::miner::lifecycle::FileChange;
use crate::timefmt::{self, Instant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitInfo {
    pub id: String,
    pub first_parent: Option<String>,
    /// Committer time, UTC.
    pub time: Instant,
}

#[derive(Debug, Clone)]
pub struct GitRepo {
    root: PathBuf,
}

impl GitRepo {
    pub fn open(path: &Path) -> Result<Self> {
        if !path.is_dir() {
            return Err(Error::Repository(format!(
                "{} is not a readable directory",
                path.display()
            )));
        }
        let repo = GitRepo {
            root: path.to_path_buf(),
        };
        repo.run(&["rev-parse", "--git-dir"])
            .map_err(|e| Error::Repository(format!("{} is not a git repository: {e}", path.display())))?;
        Ok(repo)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn command(&self) -> Command {
        let mut cmd = Command::new("git");
        cmd.arg("-C")
            .arg(&self.root)
            .args(["-c", "core.quotepath=off", "--no-pager"])
            .env("LC_ALL", "C")
            .env("GIT_TERMINAL_PROMPT", "0");
        cmd
    }

    fn run(&self, args: &[&str]) -> Result<String> {
        let bytes = self.run_bytes(args)?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    fn run_bytes(&self, args: &[&str]) -> Result<Vec<u8>> {
        let output = self
            .command()
            .args(args)
            .output()
            .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
        if !output.status.success() {
            return Err(Error::Git(format!(
                "git {} exited with {}: {}",
                args.join(" "),
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(output.stdout)
    }

    /// Resolves `rev` to a commit id.
    pub fn resolve_commit(&self, rev: &str) -> Result<String> {
        let spec = format!("{rev}^{{commit}}");
        self.run(&["rev-parse", "--verify", "--quiet", &spec])
            .map(|s| s.trim().to_string())
            .map_err(|_| Error::Repository(format!("revision `{rev}` not found")))
    }

    /// First-parent history of `tip`, oldest first.
    pub fn first_parent_history(&self, tip: &str) -> Result<Vec<CommitInfo>> {
        let out = self.run(&["log", "--first-parent", "--reverse", "--format=%H%x09%P%x09%ct", tip])?;
        out.lines()
            .filter(|l| !l.is_empty())
            .map(|line| {
                let mut fields = line.split('\t');
                let id = fields.next().unwrap_or_default().to_string();
                let first_parent = fields
                    .next()
                    .and_then(|p| p.split_whitespace().next())
                    .map(str::to_string);
                let secs: i64 = fields
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Git(format!("unexpected log line `{line}`")))?;
                Ok(CommitInfo {
                    id,
                    first_parent,
                    time: timefmt::from_unix(secs)?,
                })
            })
            .collect()
    }

    /// Ids of first-parent commits whose first-parent diff touches `pathspecs`.
    pub fn commits_touching(&self, tip: &str, pathspecs: &[String]) -> Result<HashSet<String>> {
        let mut args = vec!["log", "--first-parent", "--format=%H", tip, "--"];
        args.extend(pathspecs.iter().map(String::as_str));
        Ok(self
            .run(&args)?
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect())
    }

    fn diff_tree_args<'a>(commit: &'a CommitInfo, extra: &[&'a str]) -> Vec<&'a str> {
        let mut args = vec![
            "diff-tree",
            "--no-commit-id",
            "-r",
            "--no-color",
            "--no-ext-diff",
            "--no-textconv",
        ];
        args.extend_from_slice(extra);
        match &commit.first_parent {
            Some(parent) => {
                args.push(parent);
                args.push(&commit.id);
            }
            None => {
                args.push("--root");
                args.push(&commit.id);
            }
        }
        args
    }

    /// Unified diff of `commit` against its first parent.
    pub fn patch(&self, commit: &CommitInfo, pathspecs: &[String]) -> Result<String> {
        let mut args = Self::diff_tree_args(commit, &["-p", "--no-renames"]);
        args.push("--");
        args.extend(pathspecs.iter().map(String::as_str));
        self.run(&args)
    }

    /// File-level changes of `commit` against its first parent, with renames.
    pub fn file_changes(&self, commit: &CommitInfo, pathspecs: &[String]) -> Result<Vec<FileChange>> {
        let mut args = Self::diff_tree_args(commit, &["--name-status", "-M", "-z"]);
        args.push("--");
        args.extend(pathspecs.iter().map(String::as_str));
        let raw = self.run_bytes(&args)?;
        parse_name_status_z(&raw)
    }
}

/// Parses `git diff-tree --name-status -z` output.
pub fn parse_name_status_z(raw: &[u8]) -> Result<Vec<FileChange>> {
    let text = String::from_utf8_lossy(raw);
    let mut fields = text.split('\0').filter(|f| !f.is_empty());
    let mut changes = Vec::new();
    while let Some(status) = fields.next() {
        let mut take = || {
            fields
                .next()
                .map(str::to_string)
                .ok_or_else(|| Error::Git(format!("truncated name-status record `{status}`")))
        };
        match status.as_bytes()[0] {
            b'A' => changes.push(FileChange::Added(take()?)),
            b'D' => changes.push(FileChange::Deleted(take()?)),
            b'R' => {
                let from = take()?;
                let to = take()?;
                changes.push(FileChange::Renamed { from, to });
            }
            b'C' => {
                let _source = take()?;
                changes.push(FileChange::Added(take()?));
            }
            _ => {
                take()?;
            }
        }
    }
    Ok(changes)
}
