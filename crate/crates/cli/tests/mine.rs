// SPDX-License-Identifier: Apache-2.0

mod common;

use std::fs;
use std::sync::OnceLock;

use common::{day, run, Act, Fixture};
use togglescope::export::read_ledger;
use togglescope::miner::detect_bulk_events;
use togglescope::{build_records, RefactorPolicy};

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(common::build)
}

fn mine(preset: &str, extra: &[&str]) -> (common::Output, tempfile::TempDir) {
    let out = tempfile::tempdir().unwrap();
    let repo = fixture().path().to_str().unwrap().to_string();
    let dir = out.path().to_str().unwrap().to_string();
    let mut args = vec!["mine", "--preset", preset, "--repo", &repo, "--out", &dir];
    args.extend_from_slice(extra);
    let o = run(&args, out.path());
    (o, out)
}

#[test]
fn fixture_has_thirty_commits() {
    assert_eq!(fixture().total_commits, 30);
}

#[test]
fn gate_ledger_matches_script() {
    let (o, out) = mine("kubernetes-gates", &[]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let got = fs::read_to_string(out.path().join("events.jsonl")).unwrap();
    assert_eq!(got, fixture().gates_jsonl());
    assert!(o.stdout.contains("bulk commits (>= 20 events)"), "{}", o.stdout);
}

#[test]
fn flag_ledger_matches_script() {
    let (o, out) = mine("gitlab-flags", &[]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let got = fs::read_to_string(out.path().join("events.jsonl")).unwrap();
    assert_eq!(got, fixture().flags_jsonl());
}

#[test]
fn merge_commit_carries_side_branch_gate() {
    let f = fixture();
    let merged: Vec<_> = f.gates.iter().filter(|e| e.name == "MergedE").collect();
    assert_eq!(merged.len(), 1);
    assert_eq!(merged[0].commit, f.commit_on(18));
    assert_eq!(merged[0].timestamp, day(18));
}

#[test]
fn refactor_coalescing_under_both_policies() {
    let (o, out) = mine("kubernetes-gates", &[]);
    assert_eq!(o.code, 0);
    let ledger = read_ledger(&out.path().join("events.jsonl")).unwrap();

    let coalesced = build_records(&ledger, RefactorPolicy::Coalesce);
    assert_eq!(coalesced.coalesced_pairs, 1);
    let lives: Vec<_> = coalesced
        .records
        .iter()
        .filter(|r| r.toggle_name == "LegacyB")
        .collect();
    assert_eq!(lives.len(), 1);
    assert!(lives[0].is_active());

    let raw = build_records(&ledger, RefactorPolicy::Raw);
    assert_eq!(raw.coalesced_pairs, 0);
    let lives: Vec<_> = raw.records.iter().filter(|r| r.toggle_name == "LegacyB").collect();
    assert_eq!(lives.len(), 2);
    assert_eq!(lives[0].lifespan_days, Some(42.0));
    assert!(lives[1].is_active());
    assert_eq!(lives[1].label(), "LegacyB#2");
    assert_eq!(raw.additions, coalesced.additions + 1);
    assert_eq!(raw.removals, coalesced.removals + 1);

    // Re-added gate gets a second life under either policy.
    let c: Vec<_> = coalesced
        .records
        .iter()
        .filter(|r| r.toggle_name == "CurrentC")
        .collect();
    assert_eq!(c.len(), 2);
    assert_eq!(c[0].lifespan_days, Some(18.0 * 7.0));
}

#[test]
fn bulk_commit_detected_at_twenty() {
    let (_, out) = mine("kubernetes-gates", &[]);
    let ledger = read_ledger(&out.path().join("events.jsonl")).unwrap();
    let bulk = detect_bulk_events(&ledger, 20).unwrap();
    assert_eq!(bulk.len(), 1);
    assert_eq!(bulk[0].commit_id, fixture().bulk_commit);
    assert_eq!((bulk[0].add_count, bulk[0].remove_count), (25, 0));
    assert!(detect_bulk_events(&ledger, 26).unwrap().is_empty());
    assert_eq!(detect_bulk_events(&ledger, 5).unwrap().len(), 2);
}

#[test]
fn since_window_produces_one_orphan_removal() {
    let since = day(1);
    let (o, out) = mine("kubernetes-gates", &["--since", &since]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let ledger = read_ledger(&out.path().join("events.jsonl")).unwrap();
    assert!(ledger.events().iter().all(|e| e.commit_id != fixture().commit_on(0)));
    let records = build_records(&ledger, RefactorPolicy::Coalesce);
    assert_eq!(records.orphan_removals, 1);
    let orphan = records.records.iter().find(|r| r.toggle_name == "LegacyA").unwrap();
    assert!(orphan.anchored);
    assert_eq!(
        orphan.added_at.to_rfc3339(),
        ledger.mined_range().unwrap().first.to_rfc3339()
    );
    assert!(records.warnings.iter().any(|w| w.contains("`LegacyA` removed")));
}

#[test]
fn refactor_commit_is_recorded_as_pair() {
    let f = fixture();
    let pair: Vec<_> = f.gates.iter().filter(|e| e.commit == f.refactor_commit).collect();
    assert_eq!(pair.len(), 2);
    assert!(pair.iter().any(|e| e.action == Act::Removed));
    assert!(pair.iter().any(|e| e.action == Act::Added));
}

#[test]
fn json_summary() {
    let (o, _out) = mine("kubernetes-gates", &["--json"]);
    assert_eq!(o.code, 0);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let f = fixture();
    assert_eq!(v["events"], f.gates.len());
    assert_eq!(v["commits_walked"], 29);
    assert_eq!(v["bulk_commits"].as_array().unwrap().len(), 1);
}

#[test]
fn missing_repo_exits_2_without_output() {
    let out = tempfile::tempdir().unwrap();
    let target = out.path().join("artifacts");
    let o = run(
        &[
            "mine",
            "--preset",
            "kubernetes-gates",
            "--repo",
            "/nonexistent/repo",
            "--out",
            target.to_str().unwrap(),
        ],
        out.path(),
    );
    assert_eq!(o.code, 2, "{}", o.stderr);
    assert!(!target.join("events.jsonl").exists());
}

#[test]
fn until_before_since_exits_1() {
    let (o, out) = mine("kubernetes-gates", &["--since", "2021-01-01", "--until", "2020-01-01"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("until"), "{}", o.stderr);
    assert!(!out.path().join("events.jsonl").exists());
}

#[test]
fn unknown_revision_exits_2() {
    let (o, _) = mine("kubernetes-gates", &["--branch", "no-such-branch"]);
    assert_eq!(o.code, 2, "{}", o.stderr);
}

#[test]
fn repeated_mining_is_byte_identical() {
    let (_, a) = mine("gitlab-flags", &[]);
    let (_, b) = mine("gitlab-flags", &[]);
    for file in ["events.jsonl", "events.meta.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}
