// SPDX-License-Identifier: Apache-2.0

//! Toggle events, per-toggle lifecycle records, and project context.
//!
//! An [`EventLedger`] is the mined atom stream: one [`ToggleEvent`] per
//! observed addition or removal of a toggle definition. [`build_records`]
//! pairs those events into [`ToggleRecord`] lifecycles.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timefmt::{self, days_between, Instant};

/// Direction of a toggle event.
///
/// The derived ordering places removals before additions, which is the order
/// events of one commit are stored and replayed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Removed,
    Added,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Added => "added",
            Action::Removed => "removed",
        })
    }
}

/// One addition or removal of a named toggle at a commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToggleEvent {
    #[serde(rename = "toggle")]
    pub toggle_name: String,
    pub action: Action,
    #[serde(rename = "commit")]
    pub commit_id: String,
    #[serde(with = "timefmt::serde_instant")]
    pub timestamp: Instant,
    #[serde(rename = "path")]
    pub source_path: String,
}

impl ToggleEvent {
    pub fn new(
        toggle_name: impl Into<String>,
        action: Action,
        commit_id: impl Into<String>,
        timestamp: Instant,
        source_path: impl Into<String>,
    ) -> Self {
        ToggleEvent {
            toggle_name: toggle_name.into(),
            action,
            commit_id: commit_id.into(),
            timestamp,
            source_path: source_path.into(),
        }
    }

    /// Total order key: `(timestamp, commit)` first, then removals before
    /// additions, then name and path so that ties are fully resolved.
    fn order_key(&self) -> (Instant, &str, Action, &str, &str) {
        (
            self.timestamp,
            &self.commit_id,
            self.action,
            &self.toggle_name,
            &self.source_path,
        )
    }
}

/// First and last commit instants covered by a mining run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedRange {
    #[serde(with = "timefmt::serde_instant")]
    pub first: Instant,
    #[serde(with = "timefmt::serde_instant")]
    pub last: Instant,
}

impl MinedRange {
    pub fn contains(&self, t: &Instant) -> bool {
        self.first <= *t && *t <= self.last
    }
}

/// A sorted stream of toggle events from one repository.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLedger {
    repo_label: String,
    events: Vec<ToggleEvent>,
    mined_range: Option<MinedRange>,
}

impl EventLedger {
    /// Builds a ledger, sorting `events` into their canonical order.
    ///
    /// When `mined_range` is `None` it is inferred from the first and last
    /// event; an explicit range must contain every event.
    pub fn new(
        repo_label: impl Into<String>,
        mut events: Vec<ToggleEvent>,
        mined_range: Option<MinedRange>,
    ) -> Result<Self> {
        if let Some(ev) = events.iter().find(|e| e.toggle_name.is_empty()) {
            return Err(Error::parse(
                format!("commit {}", ev.commit_id),
                "toggle name must be non-empty",
            ));
        }
        events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        let inferred = match (events.first(), events.last()) {
            (Some(a), Some(b)) => Some(MinedRange {
                first: a.timestamp,
                last: b.timestamp,
            }),
            _ => None,
        };
        let mined_range = match mined_range {
            Some(range) => {
                if range.first > range.last {
                    return Err(Error::config("mined range starts after it ends"));
                }
                if let Some(ev) = events.iter().find(|e| !range.contains(&e.timestamp)) {
                    return Err(Error::parse(
                        format!("commit {}", ev.commit_id),
                        format!(
                            "event at {} lies outside the mined range",
                            timefmt::format_instant(&ev.timestamp)
                        ),
                    ));
                }
                Some(range)
            }
            None => inferred,
        };
        Ok(EventLedger {
            repo_label: repo_label.into(),
            events,
            mined_range,
        })
    }

    pub fn empty(repo_label: impl Into<String>) -> Self {
        EventLedger {
            repo_label: repo_label.into(),
            events: Vec::new(),
            mined_range: None,
        }
    }

    pub fn events(&self) -> &[ToggleEvent] {
        &self.events
    }

    pub fn repo_label(&self) -> &str {
        &self.repo_label
    }

    pub fn mined_range(&self) -> Option<MinedRange> {
        self.mined_range
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn count(&self, action: Action) -> usize {
        self.events.iter().filter(|e| e.action == action).count()
    }

    /// Line-delimited JSON, one event per line, trailing newline included.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            // ToggleEvent has only string and enum fields; serialisation cannot fail.
            out.push_str(&serde_json::to_string(ev).expect("event serialises"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(repo_label: impl Into<String>, text: &str, mined_range: Option<MinedRange>) -> Result<Self> {
        let mut events = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ev: ToggleEvent =
                serde_json::from_str(line).map_err(|e| Error::parse(format!("line {}", idx + 1), e.to_string()))?;
            events.push(ev);
        }
        EventLedger::new(repo_label, events, mined_range)
    }
}

/// How a removal and re-addition of the same toggle inside one commit is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefactorPolicy {
    /// Same-commit remove+add is a modification; the original life continues.
    #[default]
    #[serde(alias = "coalesce-same-commit")]
    Coalesce,
    /// Every removal closes a life and every addition opens one.
    Raw,
}

impl fmt::Display for RefactorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefactorPolicy::Coalesce => "coalesce",
            RefactorPolicy::Raw => "raw",
        })
    }
}

impl std::str::FromStr for RefactorPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coalesce" | "coalesce-same-commit" => Ok(RefactorPolicy::Coalesce),
            "raw" | "raw-pairs" => Ok(RefactorPolicy::Raw),
            other => Err(Error::config(format!(
                "unknown refactor policy `{other}` (expected coalesce or raw)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToggleStatus {
    Active,
    Removed,
}

/// The reconstructed lifecycle of one toggle life.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToggleRecord {
    pub toggle_name: String,
    /// 1-based index of this life among all lives of `toggle_name`.
    pub occurrence: u32,
    #[serde(with = "timefmt::serde_instant")]
    pub added_at: Instant,
    #[serde(with = "timefmt::serde_opt_instant")]
    pub removed_at: Option<Instant>,
    pub lifespan_days: Option<f64>,
    pub status: ToggleStatus,
    pub anomalous: bool,
    /// `added_at` was not observed and is anchored at the mined range start.
    #[serde(default)]
    pub anchored: bool,
}

impl ToggleRecord {
    fn open(name: &str, occurrence: u32, added_at: Instant, anchored: bool) -> Self {
        ToggleRecord {
            toggle_name: name.to_string(),
            occurrence,
            added_at,
            removed_at: None,
            lifespan_days: None,
            status: ToggleStatus::Active,
            anomalous: false,
            anchored,
        }
    }

    fn close(&mut self, at: Instant) {
        let lifespan = days_between(&self.added_at, &at);
        self.removed_at = Some(at);
        self.lifespan_days = Some(lifespan);
        self.status = ToggleStatus::Removed;
        self.anomalous = lifespan < 0.0;
    }

    /// Export label: the plain name for a first life, `name#k` for the k-th.
    pub fn label(&self) -> String {
        if self.occurrence <= 1 {
            self.toggle_name.clone()
        } else {
            format!("{}#{}", self.toggle_name, self.occurrence)
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == ToggleStatus::Active
    }

    pub fn is_removed(&self) -> bool {
        self.status == ToggleStatus::Removed
    }

    /// Days from `added_at` to `at`.
    pub fn age_at(&self, at: &Instant) -> f64 {
        days_between(&self.added_at, at)
    }
}

/// Output of [`build_records`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordSet {
    pub records: Vec<ToggleRecord>,
    /// Additions that opened a life under the chosen policy.
    pub additions: usize,
    /// Removals that closed a life (including orphan removals).
    pub removals: usize,
    /// Removals with no observed addition, anchored at the range start.
    pub orphan_removals: usize,
    /// Same-commit remove/add pairs read as modifications.
    pub coalesced_pairs: usize,
    pub warnings: Vec<String>,
}

impl RecordSet {
    pub fn active_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_active()).count()
    }

    pub fn removed_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_removed()).count()
    }

    pub fn anomalous_count(&self) -> usize {
        self.records.iter().filter(|r| r.anomalous).count()
    }
}

#[derive(Default)]
struct NameState {
    open: VecDeque<ToggleRecord>,
    lives: u32,
}

impl NameState {
    fn next_occurrence(&mut self) -> u32 {
        self.lives += 1;
        self.lives
    }
}

/// Pairs the ledger's events into per-toggle lifecycle records.
///
/// Events are replayed commit by commit. Within a commit, removals are
/// applied before additions. A removal closes the oldest open life of that
/// name; an addition opens a new life. Under [`RefactorPolicy::Coalesce`]
/// a remove/add of the same name in the same commit is a modification and
/// leaves the open life untouched.
///
/// Records come back ordered by `(added_at, toggle_name, occurrence)`.
pub fn build_records(ledger: &EventLedger, policy: RefactorPolicy) -> RecordSet {
    let mut out = RecordSet::default();
    if ledger.is_empty() {
        return out;
    }
    let anchor = ledger
        .mined_range()
        .map(|r| r.first)
        .unwrap_or(ledger.events()[0].timestamp);

    let mut names: BTreeMap<&str, NameState> = BTreeMap::new();
    let mut closed: Vec<ToggleRecord> = Vec::new();

    for commit in commit_groups(ledger.events()) {
        let at = commit[0].timestamp;
        let commit_id = &commit[0].commit_id;

        // name -> (removals, additions) in this commit
        let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for ev in commit {
            let entry = tally.entry(ev.toggle_name.as_str()).or_default();
            match ev.action {
                Action::Removed => entry.0 += 1,
                Action::Added => entry.1 += 1,
            }
        }

        for (name, (mut removes, mut adds)) in tally {
            let state = names.entry(name).or_default();

            if policy == RefactorPolicy::Coalesce {
                let pairs = removes.min(adds);
                if pairs > 0 {
                    removes -= pairs;
                    adds -= pairs;
                    out.coalesced_pairs += pairs;
                    if state.open.is_empty() {
                        let occ = state.next_occurrence();
                        state.open.push_back(ToggleRecord::open(name, occ, anchor, true));
                        out.warnings.push(format!(
                            "toggle `{name}` modified in commit {commit_id} without an observed \
                             addition; anchored at the mined range start"
                        ));
                    }
                }
            }

            for _ in 0..removes {
                out.removals += 1;
                let mut life = match state.open.pop_front() {
                    Some(life) => life,
                    None => {
                        out.orphan_removals += 1;
                        out.warnings.push(format!(
                            "toggle `{name}` removed in commit {commit_id} without an observed \
                             addition; anchored at the mined range start"
                        ));
                        let occ = state.next_occurrence();
                        ToggleRecord::open(name, occ, anchor, true)
                    }
                };
                life.close(at);
                if life.anomalous {
                    out.warnings.push(format!(
                        "toggle `{}` has a negative lifespan ({:.2} days)",
                        life.label(),
                        life.lifespan_days.unwrap_or_default()
                    ));
                }
                closed.push(life);
            }

            for _ in 0..adds {
                out.additions += 1;
                if !state.open.is_empty() {
                    out.warnings.push(format!(
                        "toggle `{name}` added in commit {commit_id} while already active; \
                         tracking a concurrent life"
                    ));
                }
                let occ = state.next_occurrence();
                state.open.push_back(ToggleRecord::open(name, occ, at, false));
            }
        }
    }

    out.records = closed;
    for state in names.into_values() {
        out.records.extend(state.open);
    }
    out.records
        .sort_by(|a, b| (a.added_at, &a.toggle_name, a.occurrence).cmp(&(b.added_at, &b.toggle_name, b.occurrence)));
    out
}

/// Splits a sorted event slice into runs sharing one commit.
fn commit_groups(events: &[ToggleEvent]) -> impl Iterator<Item = &[ToggleEvent]> {
    events.chunk_by(|a, b| a.commit_id == b.commit_id && a.timestamp == b.timestamp)
}

/// Normalisation denominators for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectContext {
    pub project_name: String,
    /// Analysis period `T` in months.
    pub analysis_months: f64,
    /// Codebase size `L` at the snapshot.
    pub lines_of_code: u64,
    /// Average release cycle `τ` in days.
    pub release_cycle_days: f64,
    /// Censoring boundary for survival analysis.
    #[serde(with = "timefmt::serde_instant")]
    pub snapshot_time: Instant,
}

impl ProjectContext {
    pub fn validate(&self) -> Result<()> {
        if !(self.analysis_months.is_finite() && self.analysis_months > 0.0) {
            return Err(Error::config("analysis_months must be a positive number"));
        }
        if self.lines_of_code == 0 {
            return Err(Error::config("lines_of_code must be positive"));
        }
        if !(self.release_cycle_days.is_finite() && self.release_cycle_days > 0.0) {
            return Err(Error::config("release_cycle_days must be a positive number"));
        }
        Ok(())
    }
}
