// SPDX-License-Identifier: Apache-2.0

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use togglescope::miner::diff::{scan_declarations, DeclarationMatcher};
use togglescope::miner::presets::{KUBERNETES_CURRENT_PATTERN, KUBERNETES_LEGACY_PATTERN};
use togglescope::timefmt::parse_instant;
use togglescope::{
    analyze, build_records, default_thresholds, kaplan_meier, Action, EventLedger, Policies, ProfileRule,
    ProjectContext, RefactorPolicy, ToggleEvent,
};

/// `n` toggles over eight years; about three quarters are removed later.
fn synthetic_ledger(n: usize, seed: u64) -> EventLedger {
    let mut rng = StdRng::seed_from_u64(seed);
    let base = parse_instant("2016-01-01").unwrap();
    let span = 8 * 365 * 24 * 60;
    let mut events = Vec::with_capacity(2 * n);
    for i in 0..n {
        let added = rng.gen_range(0..span);
        let name = format!("Toggle{i}");
        events.push(ToggleEvent::new(
            &name,
            Action::Added,
            format!("a{i}"),
            base + chrono::Duration::minutes(added),
            "features.go",
        ));
        if rng.gen_bool(0.75) {
            let removed = rng.gen_range(added..span);
            events.push(ToggleEvent::new(
                &name,
                Action::Removed,
                format!("r{i}"),
                base + chrono::Duration::minutes(removed),
                "features.go",
            ));
        }
    }
    EventLedger::new("bench", events, None).unwrap()
}

fn context() -> ProjectContext {
    ProjectContext {
        project_name: "bench".into(),
        analysis_months: 96.0,
        lines_of_code: 5_000_000,
        release_cycle_days: 90.0,
        snapshot_time: parse_instant("2024-01-01").unwrap(),
    }
}

fn synthetic_diff(lines: usize) -> String {
    let mut out = String::from(
        "diff --git a/pkg/features/kube_features.go b/pkg/features/kube_features.go\n\
         --- a/pkg/features/kube_features.go\n+++ b/pkg/features/kube_features.go\n",
    );
    out.push_str(&format!("@@ -1,{lines} +1,{lines} @@\n"));
    for i in 0..lines {
        out.push_str(&format!("-\tOldGate{i} featuregate.Feature = \"OldGate{i}\"\n"));
        out.push_str(&format!("+\tNewGate{i} featuregate.Feature = \"NewGate{i}\"\n"));
    }
    out
}

fn bench_records(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_records");
    for n in [1_000, 10_000] {
        let ledger = synthetic_ledger(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ledger, |b, l| {
            b.iter(|| build_records(black_box(l), RefactorPolicy::Coalesce))
        });
    }
    group.finish();
}

fn bench_survival(c: &mut Criterion) {
    let ledger = synthetic_ledger(10_000, 2);
    let records = build_records(&ledger, RefactorPolicy::Coalesce).records;
    let at = context().snapshot_time;
    c.bench_function("kaplan_meier/10000", |b| {
        b.iter(|| kaplan_meier(black_box(&records), &at, false).unwrap())
    });
}

fn bench_analyze(c: &mut Criterion) {
    let ledger = synthetic_ledger(5_000, 3);
    let table = default_thresholds();
    let rule = ProfileRule::default();
    let policies = Policies {
        refactor_policy: RefactorPolicy::Coalesce,
        include_anomalous: false,
        bulk_threshold: 20,
    };
    c.bench_function("analyze/5000", |b| {
        b.iter(|| analyze(black_box(&ledger), context(), &policies, &table, &rule).unwrap())
    });
}

fn bench_diff(c: &mut Criterion) {
    let diff = synthetic_diff(2_000);
    let matcher = DeclarationMatcher::new(&[KUBERNETES_CURRENT_PATTERN, KUBERNETES_LEGACY_PATTERN]).unwrap();
    c.bench_function("scan_declarations/4000_lines", |b| {
        b.iter(|| scan_declarations(black_box(&diff), &matcher))
    });
}

criterion_group!(benches, bench_records, bench_survival, bench_analyze, bench_diff);
criterion_main!(benches);
