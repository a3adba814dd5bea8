// SPDX-License-Identifier: Apache-2.0

//! `togglescope` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 environment or
//! I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use togglescope::{Error, RefactorPolicy};

#[derive(Debug, Parser)]
#[command(
    name = "togglescope",
    version,
    about = "Mine and benchmark feature-toggle lifecycles"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Set values override the config file,
/// which overrides the preset.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in extractor and project settings.
    #[arg(long, global = true, value_parser = ["kubernetes-gates", "gitlab-flags"])]
    pub preset: Option<String>,
    /// Local repository to mine.
    #[arg(long, global = true, value_name = "PATH")]
    pub repo: Option<PathBuf>,
    /// Revision whose first-parent history is walked.
    #[arg(long, global = true, value_name = "NAME")]
    pub branch: Option<String>,
    /// Ignore commits before this ISO-8601 instant.
    #[arg(long, global = true, value_name = "DATE")]
    pub since: Option<String>,
    /// Ignore commits after this ISO-8601 instant.
    #[arg(long, global = true, value_name = "DATE")]
    pub until: Option<String>,
    /// How same-commit remove/add pairs are read.
    #[arg(long, global = true, value_parser = parse_policy)]
    pub refactor_policy: Option<RefactorPolicy>,
    /// Keep negative lifespans (clamped to zero) in survival analysis.
    #[arg(long, global = true)]
    pub include_anomalous: bool,
    /// Events per commit that mark a bulk change.
    #[arg(long, global = true, value_name = "N")]
    pub bulk_threshold: Option<usize>,
    /// Threshold table JSON (defaults to the built-in table).
    #[arg(long, global = true, value_name = "PATH")]
    pub thresholds: Option<PathBuf>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Project label.
    #[arg(long, global = true, value_name = "NAME")]
    pub project_name: Option<String>,
    /// Analysis period in months.
    #[arg(long, global = true, value_name = "MONTHS")]
    pub analysis_months: Option<f64>,
    /// Lines of code at the snapshot.
    #[arg(long, global = true, value_name = "N")]
    pub lines_of_code: Option<u64>,
    /// Average release cycle in days.
    #[arg(long, global = true, value_name = "DAYS")]
    pub release_cycle_days: Option<f64>,
    /// Censoring instant (defaults to the last mined commit).
    #[arg(long, global = true, value_name = "DATE")]
    pub snapshot_time: Option<String>,
    /// Date stamped on community rows.
    #[arg(long, global = true, value_name = "YYYY-MM-DD")]
    pub snapshot_date: Option<String>,
}

fn parse_policy(s: &str) -> Result<RefactorPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mine toggle events into events.jsonl.
    Mine,
    /// Compute metrics, survival and tiers from an events file.
    Report {
        /// Events file (defaults to <out>/events.jsonl).
        #[arg(long, value_name = "PATH")]
        events: Option<PathBuf>,
    },
    /// Mine, then report.
    Run,
    /// Classify five metric values against the thresholds.
    #[command(allow_negative_numbers = true)]
    Assess {
        /// metrics.json produced by `report`, or any JSON with the metric fields.
        #[arg(long, value_name = "PATH", conflicts_with = "values")]
        metrics: Option<PathBuf>,
        /// churn, net accumulation, cleanup ratio, density, normalized lifespan;
        /// `-` or `n/a` marks a missing value.
        #[arg(value_name = "VALUE", num_args = 1..=5)]
        values: Vec<String>,
    },
    /// Append metric files as rows of a community CSV.
    ExportCommunity {
        /// metrics.json files, one row each.
        #[arg(long = "metrics", value_name = "PATH", required = true)]
        metrics: Vec<PathBuf>,
        /// Community CSV (defaults to <out>/community.csv).
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Side-by-side comparison of several metric files.
    Compare {
        #[arg(value_name = "METRICS_JSON", required = true)]
        metrics: Vec<PathBuf>,
    },
    /// Write the threshold table JSON.
    Thresholds {
        /// Destination file; stdout when omitted.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Classify a grid of values covering every zone boundary (golden file).
    Grid {
        /// Minimum number of tuples.
        #[arg(long, default_value_t = 200)]
        min: usize,
        /// Destination file; stdout when omitted.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    if err.is_config() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let g = &cli.global;
    let result = match cli.command {
        Command::Mine => commands::mine(g).map(|_| ()),
        Command::Report { events } => commands::report(g, events),
        Command::Run => commands::run(g),
        Command::Assess { metrics, values } => commands::assess(g, metrics, &values),
        Command::ExportCommunity { metrics, csv } => commands::export_community(g, &metrics, csv),
        Command::Compare { metrics } => commands::compare(g, &metrics),
        Command::Thresholds { output } => commands::thresholds(g, output),
        Command::Grid { min, output } => commands::grid(g, min, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
