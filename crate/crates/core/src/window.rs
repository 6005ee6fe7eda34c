//! Daily transmission window in local time. All times here are seconds on
//! a local clock (Unix seconds shifted by the UTC offset).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const DAY_S: i64 = 86_400;

/// Seconds after local midnight, written `HH:MM` or `HH:MM:SS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(pub u32);

impl TimeOfDay {
    pub fn hm(h: u32, m: u32) -> Self {
        Self(h * 3600 + m * 60)
    }

    pub fn secs(self) -> i64 {
        self.0 as i64
    }
}

impl FromStr for TimeOfDay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let nums: Result<Vec<u32>, _> = parts.iter().map(|p| p.parse::<u32>()).collect();
        match nums.as_deref() {
            Ok([h, m]) if *h < 24 && *m < 60 => Ok(Self::hm(*h, *m)),
            Ok([h, m, sec]) if *h < 24 && *m < 60 && *sec < 60 => Ok(Self(h * 3600 + m * 60 + sec)),
            _ => Err(format!("bad time of day {s:?}, expected HH:MM")),
        }
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (h, m, s) = (self.0 / 3600, self.0 / 60 % 60, self.0 % 60);
        if s == 0 {
            write!(f, "{h:02}:{m:02}")
        } else {
            write!(f, "{h:02}:{m:02}:{s:02}")
        }
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `[start, end)`, wrapping midnight when `end <= start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionWindow {
    pub start: TimeOfDay,
    pub end: TimeOfDay,
}

impl Default for TransmissionWindow {
    fn default() -> Self {
        Self { start: TimeOfDay::hm(22, 0), end: TimeOfDay::hm(5, 0) }
    }
}

impl TransmissionWindow {
    pub fn len_s(&self) -> i64 {
        (self.end.secs() - self.start.secs()).rem_euclid(DAY_S)
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.start == self.end {
            return Err("transmission window must have positive length");
        }
        Ok(())
    }

    /// Start of the window that is open at `t`, or else the next one.
    /// Doubles as the window identifier for cache scoping.
    pub fn window_start(&self, t: f64) -> i64 {
        let len = self.len_s();
        let ft = t.floor() as i64;
        // The window beginning on the local day of `t - len` may still be
        // open; otherwise the next one is a day later.
        let day = (ft - self.start.secs() - len).div_euclid(DAY_S) + 1;
        day * DAY_S + self.start.secs()
    }

    pub fn window_id(&self, t: f64) -> i64 {
        self.window_start(t).div_euclid(DAY_S)
    }

    pub fn is_open(&self, t: f64) -> bool {
        let s = self.window_start(t) as f64;
        t >= s && t < s + self.len_s() as f64
    }

    /// Close time of the window open at (or next opening after) `t`.
    pub fn window_end(&self, t: f64) -> f64 {
        (self.window_start(t) + self.len_s()) as f64
    }

    /// `t` itself when open, else the next opening.
    pub fn next_open(&self, t: f64) -> f64 {
        if self.is_open(t) {
            t
        } else {
            self.window_start(t) as f64
        }
    }
}
