// SPDX-License-Identifier: Apache-2.0
//! Fixed-point simulated time with picosecond resolution.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const PICOS_PER_SEC: u64 = 1_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid time value `{0}`")]
pub struct TimeParseError(pub String);

/// Simulated time since the start of a run, in picoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_picos(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * PICOS_PER_SEC)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * (PICOS_PER_SEC / 1000))
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * (PICOS_PER_SEC / 1_000_000))
    }

    /// Rounds to the nearest picosecond. Negative or non-finite inputs clamp to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if !s.is_finite() || s <= 0.0 {
            return SimTime(0);
        }
        SimTime((s * PICOS_PER_SEC as f64).round() as u64)
    }

    pub const fn as_picos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / PICOS_PER_SEC as f64
    }

    pub const fn whole_secs(self) -> u64 {
        self.0 / PICOS_PER_SEC
    }

    /// Sub-second part truncated to microseconds, as PCAP stores it.
    pub const fn subsec_micros(self) -> u32 {
        ((self.0 % PICOS_PER_SEC) / 1_000_000) as u32
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

/// Exact decimal parsing: `"1.5"` is 1.5 s with no float rounding.
impl FromStr for SimTime {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TimeParseError(s.to_string());
        let t = s.trim();
        let t = t.strip_suffix('s').unwrap_or(t);
        if t.is_empty() || t.starts_with('-') || t.starts_with('+') {
            return Err(err());
        }
        let (whole, frac) = match t.split_once('.') {
            Some((w, f)) => (w, f),
            None => (t, ""),
        };
        if (whole.is_empty() && frac.is_empty())
            || !whole.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || frac.len() > 12
        {
            return Err(err());
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| err())? };
        let mut frac_ps: u64 = 0;
        if !frac.is_empty() {
            frac_ps = frac.parse::<u64>().map_err(|_| err())? * 10u64.pow(12 - frac.len() as u32);
        }
        whole
            .checked_mul(PICOS_PER_SEC)
            .and_then(|w| w.checked_add(frac_ps))
            .map(SimTime)
            .ok_or_else(err)
    }
}

/// Seconds with trailing zeros trimmed: `100`, `1.5`, `0.000081`.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / PICOS_PER_SEC;
        let frac = self.0 % PICOS_PER_SEC;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:012}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Serialize for SimTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SimTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(u64),
            Float(f64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(SimTime::from_secs(i)),
            Repr::Float(x) if x >= 0.0 => Ok(SimTime::from_secs_f64(x)),
            Repr::Float(x) => Err(serde::de::Error::custom(format!("negative time {x}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_exactly() {
        assert_eq!("1.5".parse::<SimTime>().unwrap(), SimTime::from_millis(1500));
        assert_eq!("50".parse::<SimTime>().unwrap(), SimTime::from_secs(50));
        assert_eq!("0.000000000001".parse::<SimTime>().unwrap(), SimTime::from_picos(1));
        assert!("-1".parse::<SimTime>().is_err());
        assert!("abc".parse::<SimTime>().is_err());
        assert!(".".parse::<SimTime>().is_err());
    }

    #[test]
    fn display_trims() {
        assert_eq!(SimTime::from_secs(100).to_string(), "100");
        assert_eq!(SimTime::from_millis(1500).to_string(), "1.5");
        assert_eq!(SimTime::from_micros(81).to_string(), "0.000081");
    }

    #[test]
    fn pcap_split() {
        let t = SimTime::from_millis(1500);
        assert_eq!(t.whole_secs(), 1);
        assert_eq!(t.subsec_micros(), 500_000);
    }
}
