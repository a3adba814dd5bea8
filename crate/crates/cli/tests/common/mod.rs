// SPDX-License-Identifier: Apache-2.0

//! Scripted fixture repository shared by the integration tests.
//!
//! Every commit is created with fixed author/committer dates and records the
//! toggle events it is expected to produce. The expected ledgers are built
//! from those records and `git rev-parse`, independently of the miner.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub const KUBE_FILE: &str = "pkg/features/kube_features.go";
pub const FLAGS_DIR: &str = "config/feature_flags";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Act {
    // Removals sort first within a commit.
    Removed,
    Added,
}

impl Act {
    fn as_str(self) -> &'static str {
        match self {
            Act::Removed => "removed",
            Act::Added => "added",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expected {
    pub name: String,
    pub action: Act,
    pub commit: String,
    pub timestamp: String,
    pub path: String,
}

impl Expected {
    pub fn jsonl(&self) -> String {
        format!(
            "{{\"toggle\":\"{}\",\"action\":\"{}\",\"commit\":\"{}\",\"timestamp\":\"{}\",\"path\":\"{}\"}}\n",
            self.name,
            self.action.as_str(),
            self.commit,
            self.timestamp,
            self.path
        )
    }
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    /// Declaration-mode events (Kubernetes-style gates).
    pub gates: Vec<Expected>,
    /// File-lifecycle events (YAML flag definitions).
    pub flags: Vec<Expected>,
    /// `day -> commit id` for first-parent commits.
    pub commits: Vec<(u32, String)>,
    pub total_commits: usize,
    pub bulk_commit: String,
    pub refactor_commit: String,
}

impl Fixture {
    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn gates_jsonl(&self) -> String {
        render(&self.gates)
    }

    pub fn flags_jsonl(&self) -> String {
        render(&self.flags)
    }

    pub fn commit_on(&self, day: u32) -> &str {
        &self.commits.iter().find(|(d, _)| *d == day).expect("commit day").1
    }
}

fn render(events: &[Expected]) -> String {
    let mut sorted = events.to_vec();
    sorted.sort_by(|a, b| {
        (&a.timestamp, &a.commit, a.action, &a.name, &a.path).cmp(&(
            &b.timestamp,
            &b.commit,
            b.action,
            &b.name,
            &b.path,
        ))
    });
    sorted.iter().map(Expected::jsonl).collect()
}

/// Fixed instant for fixture day `n`: 2020-01-01T12:00:00Z plus `n` weeks.
pub fn day(n: u32) -> String {
    let base = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let d = base + chrono::Days::new(7 * n as u64);
    format!("{}T12:00:00Z", d.format("%Y-%m-%d"))
}

pub fn git(dir: &Path, args: &[&str], when: Option<&str>) -> String {
    let mut cmd = Command::new("git");
    cmd.current_dir(dir)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_AUTHOR_NAME", "Fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.com")
        .env("GIT_COMMITTER_NAME", "Fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.com")
        .args(args);
    if let Some(t) = when {
        cmd.env("GIT_AUTHOR_DATE", t).env("GIT_COMMITTER_DATE", t);
    }
    let out = cmd.output().expect("git runs");
    assert!(
        out.status.success(),
        "git {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

#[derive(Clone, Copy, PartialEq)]
enum Syntax {
    Legacy,
    Current,
}

/// Builder that keeps the gate file as an ordered list of declarations.
struct Script {
    root: PathBuf,
    decls: Vec<(String, Syntax)>,
    comment: u32,
    gates: Vec<Expected>,
    flags: Vec<Expected>,
    pending_gates: Vec<(String, Act)>,
    pending_flags: Vec<(String, Act, String)>,
    commits: Vec<(u32, String)>,
    total: usize,
}

impl Script {
    fn write(&self, rel: &str, body: &str) {
        let p = self.root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }

    fn render_gates(&self) {
        let mut body = String::from(
            "// Code generated for tests. DO NOT EDIT.\n\npackage features\n\nimport (\n\
             \t\"k8s.io/component-base/featuregate\"\n\
             \tutilfeature \"k8s.io/apiserver/pkg/util/feature\"\n)\n\n",
        );
        body.push_str(&format!("// revision {}\n\nconst (\n", self.comment));
        for (name, syntax) in &self.decls {
            body.push_str(&format!("\t// owner: @sig-{}\n", name.to_lowercase()));
            let ty = match syntax {
                Syntax::Legacy => "utilfeature.Feature",
                Syntax::Current => "featuregate.Feature",
            };
            body.push_str(&format!("\t{name} {ty} = \"{name}\"\n\n"));
        }
        body.push_str(")\n");
        self.write(KUBE_FILE, &body);
    }

    fn add_gate(&mut self, name: &str, syntax: Syntax) {
        self.decls.push((name.to_string(), syntax));
        self.pending_gates.push((name.to_string(), Act::Added));
    }

    fn remove_gate(&mut self, name: &str) {
        let idx = self.decls.iter().position(|(n, _)| n == name).expect("gate exists");
        self.decls.remove(idx);
        self.pending_gates.push((name.to_string(), Act::Removed));
    }

    fn migrate_gate(&mut self, name: &str) {
        let slot = self.decls.iter_mut().find(|(n, _)| n == name).expect("gate exists");
        slot.1 = Syntax::Current;
        self.pending_gates.push((name.to_string(), Act::Removed));
        self.pending_gates.push((name.to_string(), Act::Added));
    }

    fn add_flag(&mut self, rel: &str) {
        let name = stem(rel);
        self.write(
            &format!("{FLAGS_DIR}/{rel}"),
            &format!("---\nname: {name}\nintroduced_by_url: https://example.com/mr/{name}\ntype: development\ndefault_enabled: false\n"),
        );
        self.pending_flags
            .push((name, Act::Added, format!("{FLAGS_DIR}/{rel}")));
    }

    fn delete_flag(&mut self, rel: &str) {
        let path = format!("{FLAGS_DIR}/{rel}");
        git(&self.root, &["rm", "-q", &path], None);
        self.pending_flags.push((stem(rel), Act::Removed, path));
    }

    fn rename_flag(&mut self, from: &str, to: &str) {
        let (src, dst) = (format!("{FLAGS_DIR}/{from}"), format!("{FLAGS_DIR}/{to}"));
        fs::create_dir_all(self.root.join(&dst).parent().unwrap()).unwrap();
        git(&self.root, &["mv", &src, &dst], None);
        if stem(from) != stem(to) {
            self.pending_flags.push((stem(from), Act::Removed, src));
            self.pending_flags.push((stem(to), Act::Added, dst));
        }
    }

    fn commit(&mut self, n: u32, message: &str) -> String {
        self.render_gates();
        let when = day(n);
        git(&self.root, &["add", "-A"], None);
        git(
            &self.root,
            &["commit", "-q", "--allow-empty", "-m", message],
            Some(&when),
        );
        let id = git(&self.root, &["rev-parse", "HEAD"], None);
        self.record(&id, &when);
        self.commits.push((n, id.clone()));
        self.total += 1;
        id
    }

    fn record(&mut self, id: &str, when: &str) {
        for (name, action) in self.pending_gates.drain(..) {
            self.gates.push(Expected {
                name,
                action,
                commit: id.to_string(),
                timestamp: when.to_string(),
                path: KUBE_FILE.to_string(),
            });
        }
        for (name, action, path) in self.pending_flags.drain(..) {
            self.flags.push(Expected {
                name,
                action,
                commit: id.to_string(),
                timestamp: when.to_string(),
                path,
            });
        }
    }
}

fn stem(rel: &str) -> String {
    let base = rel.rsplit('/').next().unwrap();
    base.split('.').next().unwrap().to_string()
}

/// Builds the 30-commit fixture repository on branch `master`.
pub fn build() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    git(&root, &["init", "-q", "-b", "master"], None);
    let mut s = Script {
        root,
        decls: Vec::new(),
        comment: 0,
        gates: Vec::new(),
        flags: Vec::new(),
        pending_gates: Vec::new(),
        pending_flags: Vec::new(),
        commits: Vec::new(),
        total: 0,
    };

    s.write("README.md", "fixture\n");
    s.add_gate("LegacyA", Syntax::Legacy);
    s.add_gate("LegacyB", Syntax::Legacy);
    s.commit(0, "initial gates");

    s.add_gate("CurrentC", Syntax::Current);
    s.commit(1, "add CurrentC");

    s.write("README.md", "fixture\n\nmore docs\n");
    s.commit(2, "docs");

    s.add_flag("development/flag_one.yml");
    s.commit(3, "flag one");

    s.add_flag("ops/flag_two.yml");
    s.add_flag("ops/flag_three.yml");
    s.commit(4, "flags two and three");

    s.remove_gate("LegacyA");
    s.commit(5, "graduate LegacyA");

    s.migrate_gate("LegacyB");
    let refactor = s.commit(6, "move LegacyB to featuregate");

    s.rename_flag("ops/flag_two.yml", "ops/flag_two_v2.yml");
    s.commit(7, "rename flag two");

    s.rename_flag("ops/flag_three.yml", "development/flag_three.yml");
    s.commit(8, "move flag three");

    s.delete_flag("development/flag_one.yml");
    s.commit(9, "drop flag one");

    for i in 1..=25 {
        s.add_gate(&format!("Bulk{i:02}"), Syntax::Current);
    }
    let bulk = s.commit(10, "import 25 gates");

    s.comment += 1;
    s.commit(11, "touch header");

    for i in 1..=5 {
        s.remove_gate(&format!("Bulk{i:02}"));
    }
    s.commit(12, "retire five gates");

    s.write(&format!("{FLAGS_DIR}/README.md"), "flag docs\n");
    s.commit(13, "flag docs");

    s.add_flag("development/flag_four.yml");
    s.commit(14, "flag four");

    s.add_gate("DeprecatedD", Syntax::Legacy);
    s.commit(15, "add DeprecatedD");

    // Side branch merged with --no-ff: its gate appears at the merge commit.
    git(&s.root, &["checkout", "-q", "-b", "topic"], None);
    s.add_gate("MergedE", Syntax::Current);
    s.render_gates();
    git(&s.root, &["add", "-A"], None);
    git(&s.root, &["commit", "-q", "-m", "topic: MergedE"], Some(&day(16)));
    s.total += 1;
    let pending = std::mem::take(&mut s.pending_gates);
    git(&s.root, &["checkout", "-q", "master"], None);
    s.decls.retain(|(n, _)| n != "MergedE");
    s.add_flag("ops/flag_five.yml");
    s.commit(17, "flag five");
    git(
        &s.root,
        &["merge", "-q", "--no-ff", "-m", "merge topic", "topic"],
        Some(&day(18)),
    );
    let merge = git(&s.root, &["rev-parse", "HEAD"], None);
    s.decls.push(("MergedE".to_string(), Syntax::Current));
    s.pending_gates = pending;
    s.record(&merge, &day(18));
    s.commits.push((18, merge));
    s.total += 1;

    s.remove_gate("CurrentC");
    s.commit(19, "remove CurrentC");

    s.add_gate("CurrentC", Syntax::Current);
    s.commit(20, "restore CurrentC");

    s.delete_flag("ops/flag_two_v2.yml");
    s.commit(21, "drop flag two");

    s.write(
        &format!("{FLAGS_DIR}/development/flag_four.yml"),
        "---\nname: flag_four\ntype: ops\ndefault_enabled: true\n",
    );
    s.commit(22, "flip flag four");

    s.remove_gate("DeprecatedD");
    s.commit(23, "remove DeprecatedD");

    s.remove_gate("Bulk06");
    s.add_gate("Bulk26", Syntax::Current);
    s.commit(24, "swap a gate");

    s.delete_flag("development/flag_three.yml");
    s.add_flag("development/flag_six.yml");
    s.commit(25, "swap a flag");

    s.write("README.md", "fixture\n\nmore docs\nand more\n");
    s.commit(26, "docs");

    for name in ["Bulk07", "Bulk08", "Bulk09"] {
        s.remove_gate(name);
    }
    s.commit(27, "retire three gates");

    s.add_flag("ops/flag_seven.yml");
    s.commit(28, "flag seven");

    s.add_gate("FinalF", Syntax::Current);
    s.commit(29, "add FinalF");

    // Sanity: the script's own bookkeeping is consistent.
    let active: BTreeSet<&str> = s.decls.iter().map(|(n, _)| n.as_str()).collect();
    assert!(active.contains("MergedE") && active.contains("CurrentC"));

    Fixture {
        dir,
        gates: s.gates,
        flags: s.flags,
        commits: s.commits,
        total_commits: s.total,
        bulk_commit: bulk,
        refactor_commit: refactor,
    }
}

/// Path to the built `togglescope` binary.
pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_togglescope"))
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    let out = Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Synthetic ledger with the Kubernetes baseline totals: 603 additions,
/// 448 removals, 155 active toggles, and a Kaplan-Meier median of exactly
/// 734 days. Every active toggle is older than 734 days at the returned
/// snapshot, so no censoring happens before the median and the 302nd
/// smallest removed lifespan is the median.
pub fn kubernetes_aggregate() -> (togglescope::EventLedger, String) {
    use togglescope::timefmt::parse_instant;
    use togglescope::{Action, EventLedger, ToggleEvent};

    let start = parse_instant("2016-12-01").unwrap();
    let snapshot = start + chrono::Duration::days(3135);
    let mut events = Vec::new();
    let mut n = 0;
    let mut push = |name: String, action, at| {
        n += 1;
        events.push(ToggleEvent::new(name, action, format!("c{n:05}"), at, KUBE_FILE));
    };
    for i in 0..448i64 {
        let lifespan = match i {
            0..=300 => 100 + 2 * i,
            301 => 734,
            _ => 800 + (i - 302) * 5,
        };
        let added = start + chrono::Duration::days(i * 3);
        push(format!("Removed{i:03}"), Action::Added, added);
        push(
            format!("Removed{i:03}"),
            Action::Removed,
            added + chrono::Duration::days(lifespan),
        );
    }
    for k in 0..155i64 {
        push(
            format!("Active{k:03}"),
            Action::Added,
            start + chrono::Duration::days(100 + 10 * k),
        );
    }
    let ledger = EventLedger::new("kubernetes", events, None).unwrap();
    (ledger, togglescope::timefmt::format_instant(&snapshot))
}
