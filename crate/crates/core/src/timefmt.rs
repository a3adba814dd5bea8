// SPDX-License-Identifier: Apache-2.0

//! ISO-8601 UTC instants, second precision, as used in every artifact.

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, TimeZone, Utc};

use crate::error::{Error, Result};

pub type Instant = DateTime<Utc>;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

pub fn format_instant(t: &Instant) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Parses an RFC 3339 instant (any offset, normalised to UTC), a naive
/// `YYYY-MM-DDTHH:MM:SS` taken as UTC, or a bare date taken as midnight UTC.
pub fn parse_instant(s: &str) -> Result<Instant> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(truncate(t.with_timezone(&Utc)));
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(Utc.from_utc_datetime(&t));
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")));
    }
    Err(Error::parse(s, "expected an ISO-8601 date or instant"))
}

pub fn from_unix(secs: i64) -> Result<Instant> {
    Utc.timestamp_opt(secs, 0)
        .single()
        .ok_or_else(|| Error::parse(secs.to_string(), "unix timestamp out of range"))
}

/// Signed difference `later - earlier` in fractional days.
pub fn days_between(earlier: &Instant, later: &Instant) -> f64 {
    (*later - *earlier).num_seconds() as f64 / SECONDS_PER_DAY
}

fn truncate(t: Instant) -> Instant {
    Utc.timestamp_opt(t.timestamp(), 0).single().unwrap_or(t)
}

/// Serde adapter for [`Instant`] fields.
pub mod serde_instant {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Instant, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_instant(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Instant, D::Error> {
        let raw = String::deserialize(d)?;
        parse_instant(&raw).map_err(de::Error::custom)
    }
}

/// Serde adapter for `Option<Instant>` fields.
pub mod serde_opt_instant {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Option<Instant>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_str(&format_instant(t)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Instant>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|raw| parse_instant(&raw).map_err(de::Error::custom))
            .transpose()
    }
}
