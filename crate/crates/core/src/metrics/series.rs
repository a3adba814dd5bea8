// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, Days, NaiveDate};
use serde::Serialize;

use crate::ledger::{Action, EventLedger};

/// A calendar month in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            YearMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            YearMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MonthlyCount {
    pub month: YearMonth,
    pub additions: u64,
    pub removals: u64,
}

/// Monthly addition/removal counts from the first to the last event month,
/// empty months included.
pub fn monthly_series(ledger: &EventLedger) -> Vec<MonthlyCount> {
    let mut buckets: BTreeMap<YearMonth, (u64, u64)> = BTreeMap::new();
    for ev in ledger.events() {
        let slot = buckets.entry(YearMonth::of(ev.timestamp.date_naive())).or_default();
        match ev.action {
            Action::Added => slot.0 += 1,
            Action::Removed => slot.1 += 1,
        }
    }
    let (Some(&first), Some(&last)) = (buckets.keys().next(), buckets.keys().next_back()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut month = first;
    while month <= last {
        let (additions, removals) = buckets.get(&month).copied().unwrap_or_default();
        out.push(MonthlyCount {
            month,
            additions,
            removals,
        });
        month = month.succ();
    }
    out
}

/// Daily running count of active toggles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DailyActive {
    pub points: Vec<(NaiveDate, i64)>,
    /// Set when the running sum dips below zero (orphan removals).
    pub warnings: Vec<String>,
}

impl DailyActive {
    pub fn last_value(&self) -> Option<i64> {
        self.points.last().map(|&(_, v)| v)
    }
}

/// One point per UTC day from the first event through `end` (or the last
/// event day when `end` is earlier or absent), valued at cumulative
/// additions minus removals through that day.
pub fn active_series(ledger: &EventLedger, end: Option<NaiveDate>) -> DailyActive {
    let mut net_by_day: BTreeMap<NaiveDate, i64> = BTreeMap::new();
    for ev in ledger.events() {
        *net_by_day.entry(ev.timestamp.date_naive()).or_default() += match ev.action {
            Action::Added => 1,
            Action::Removed => -1,
        };
    }
    let (Some(&first), Some(&last_event)) = (net_by_day.keys().next(), net_by_day.keys().next_back()) else {
        return DailyActive::default();
    };
    let last = end.map_or(last_event, |e| e.max(last_event));

    let mut out = DailyActive::default();
    let mut running = 0i64;
    let mut day = first;
    loop {
        running += net_by_day.get(&day).copied().unwrap_or(0);
        if running < 0 && out.warnings.is_empty() {
            out.warnings.push(format!(
                "active toggle count falls below zero on {day}; the ledger contains \
                 removals of toggles added before the mined range"
            ));
        }
        out.points.push((day, running));
        if day >= last {
            break;
        }
        day = day + Days::new(1);
    }
    out
}
