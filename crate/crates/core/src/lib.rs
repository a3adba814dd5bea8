// SPDX-License-Identifier: Apache-2.0

//! Feature-toggle lifecycle mining and benchmarking.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`miner`] walks a repository's first-parent history and emits an
//!    [`EventLedger`] of toggle additions and removals.
//! 2. [`build_records`] pairs events into per-toggle lives.
//! 3. [`metrics`] and [`survival`] compute the five benchmark metrics,
//!    a Kaplan-Meier curve, lifespan tiers and permanent-toggle flags.
//! 4. [`assessment`] places each metric in a threshold zone and derives a
//!    project profile.
//!
//! [`report::analyze`] runs stages 2 through 4 in one call.

pub mod assessment;
pub mod config;
pub mod error;
pub mod export;
pub mod ledger;
pub mod metrics;
pub mod miner;
pub mod report;
pub mod survival;
pub mod timefmt;

pub use assessment::{
    assess_project, compare_projects, default_thresholds, golden_grid, Assessment, MetricId, Profile, ProfileRule,
    ThresholdTable, Zone, ZoneResult,
};
pub use config::{ConfigLayer, Policies, RunConfig};
pub use error::{Error, Result};
pub use ledger::{
    build_records, Action, EventLedger, MinedRange, ProjectContext, RecordSet, RefactorPolicy, ToggleEvent,
    ToggleRecord, ToggleStatus,
};
pub use metrics::{MetricSet, MetricValues};
pub use miner::{mine_repository, ExtractorConfig, ExtractorMode, MiningOutcome};
pub use report::{analyze, Analysis};
pub use survival::{kaplan_meier, median_survival, SurvivalCurve};
pub use timefmt::Instant;
