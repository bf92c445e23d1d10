//! Epoch and local clock helpers. All timestamps are UTC seconds since the
//! Unix epoch; minutes are `floor(seconds / 60)`.

use chrono::{DateTime, Datelike};

pub const MINUTES_PER_DAY: i64 = 1440;

#[inline]
pub fn minute_of(t: f64) -> i64 {
    (t / 60.0).floor() as i64
}

/// Fixed-offset local clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clock {
    pub utc_offset_min: i64,
}

impl Default for Clock {
    fn default() -> Self {
        // Pacific standard time.
        Clock { utc_offset_min: -480 }
    }
}

impl Clock {
    pub fn new(utc_offset_min: i64) -> Self {
        Clock { utc_offset_min }
    }

    /// Local minute of day in `[0, 1440)`.
    pub fn minute_of_day(&self, minute: i64) -> i64 {
        (minute + self.utc_offset_min).rem_euclid(MINUTES_PER_DAY)
    }

    /// Local (year, quarter) of a UTC timestamp in seconds.
    pub fn year_quarter(&self, t: f64) -> (i32, u8) {
        let local = t.floor() as i64 + self.utc_offset_min * 60;
        let dt = DateTime::from_timestamp(local, 0).unwrap_or_default();
        (dt.year(), ((dt.month0() / 3) + 1) as u8)
    }
}
