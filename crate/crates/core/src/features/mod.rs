//! Per-minute airport-state features.

mod catalog;
mod timeline;

use std::io::{Read, Write};

use rayon::prelude::*;

pub use catalog::{
    catalog, is_integer_valued, Direction, FeatureKind, FeatureSpec, Quantity, Stat, DELAY_THRESHOLDS, ELAPSED_K,
    FEATURE_COUNT, GROUPS, MAX_LOOKBACK, WINDOWS,
};
pub use timeline::{build_timeline, FeatureOptions, MinuteState, Timeline, WeightClassMap};

use crate::airport::Airport;
use crate::error::{Error, Result};
use crate::ingest::{FlightRecord, WeatherRecord};

/// The 135 ordered field values for one minute.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub minute: i64,
    pub values: Vec<f64>,
}

impl FeatureVector {
    /// Value at a 1-based catalog index.
    pub fn get(&self, index: usize) -> f64 {
        self.values[index - 1]
    }
}

/// Splits wind into (headwind, crosswind) relative to a runway heading.
/// Negative headwind is a tailwind.
pub fn wind_components(wind_angle_deg: f64, wind_speed_kt: f64, runway_heading_deg: f64) -> (f64, f64) {
    let delta = (wind_angle_deg - runway_heading_deg).to_radians();
    (wind_speed_kt * delta.cos(), (wind_speed_kt * delta.sin()).abs())
}

/// Delay in minutes: gate-out deviation for departures, wheels-on deviation
/// for arrivals. Early movements count as zero delay.
pub fn delay_minutes(record: &FlightRecord, direction: Direction) -> Option<f64> {
    let (actual, scheduled) = match direction {
        Direction::Out => (record.act_gate_out?, record.sched_gate_out?),
        Direction::In => (record.act_wheels_on?, record.sched_wheels_on?),
    };
    Some(((actual - scheduled) / 60.0).max(0.0))
}

fn class_sum(counts: &[[u32; 3]; 3], airport: Airport, class: Option<crate::airport::WeightClass>) -> f64 {
    let row = &counts[airport.index()];
    match class {
        Some(c) => row[c.index()] as f64,
        None => row.iter().sum::<u32>() as f64,
    }
}

fn delay_list(state: &MinuteState, dir: Direction) -> &[f64] {
    match dir {
        Direction::In => &state.delays_in,
        Direction::Out => &state.delays_out,
    }
}

fn weather_of(state: &MinuteState) -> Result<&WeatherRecord> {
    state.weather.as_ref().ok_or(Error::UnusableMinute { minute: state.minute, reason: "no weather record" })
}

fn instant(tl: &Timeline, q: Quantity, minute: i64) -> Result<f64> {
    let s = tl.state(minute).ok_or(Error::InsufficientHistory { minute })?;
    Ok(match q {
        Quantity::TimeOfDay => tl.clock().minute_of_day(minute) as f64,
        Quantity::Inbound(a) => s.inbound[a.index()] as f64,
        Quantity::Outbound(a) => s.outbound[a.index()] as f64,
        Quantity::TaxiIn => s.taxi_in as f64,
        Quantity::TaxiOut => s.taxi_out as f64,
        Quantity::Landings(a, c) => class_sum(&s.landings, a, c),
        Quantity::Takeoffs(a, c) => class_sum(&s.takeoffs, a, c),
        Quantity::DelayTotal(d) => delay_list(s, d).iter().sum(),
        Quantity::DelayedOver(d, th) => delay_list(s, d).iter().filter(|&&x| x > th).count() as f64,
        Quantity::DelayMean(d) => {
            let list = delay_list(s, d);
            if list.is_empty() {
                0.0
            } else {
                list.iter().sum::<f64>() / list.len() as f64
            }
        }
        Quantity::Vmc => f64::from(u8::from(weather_of(s)?.vmc)),
        Quantity::Ceiling => weather_of(s)?.ceiling,
        Quantity::Visibility => weather_of(s)?.visibility,
        Quantity::Temperature => weather_of(s)?.temperature.ok_or(Error::UnusableMinute {
            minute,
            reason: "temperature missing; interpolate first",
        })?,
        Quantity::WindAngle => weather_of(s)?.wind_angle,
        Quantity::WindSpeed => weather_of(s)?.wind_speed,
        Quantity::Headwind | Quantity::Crosswind => {
            let w = weather_of(s)?;
            let (head, cross) = wind_components(w.wind_angle, w.wind_speed, tl.options.runway_heading_deg);
            if q == Quantity::Headwind {
                head
            } else {
                cross
            }
        }
        Quantity::ArrRunways => weather_of(s)?.arr_runways as f64,
        Quantity::DepRunways => weather_of(s)?.dep_runways as f64,
    })
}

fn window_sum(tl: &Timeline, q: Quantity, minute: i64, w: u32) -> Result<f64> {
    let mut total = 0.0;
    for m in (minute - w as i64 + 1)..=minute {
        total += instant(tl, q, m)?;
    }
    Ok(total)
}

fn elapsed(tl: &Timeline, q: Quantity, minute: i64, k: usize) -> f64 {
    let times = match q {
        Quantity::Landings(a, _) => tl.landing_times(a),
        Quantity::Takeoffs(a, _) => tl.takeoff_times(a),
        _ => unreachable!("elapsed fields are defined on movements"),
    };
    let now = (minute + 1) as f64 * 60.0;
    // events strictly before the end of the current minute
    let seen = times.partition_point(|&t| t < now);
    let cap = tl.options.elapsed_cap_min;
    if seen < k {
        return cap;
    }
    ((now - times[seen - k]) / 60.0).min(cap)
}

/// Checks that `minute` and its full look-back are complete.
pub fn check_usable(tl: &Timeline, minute: i64) -> Result<()> {
    if minute - MAX_LOOKBACK < tl.start || minute >= tl.end {
        return Err(Error::InsufficientHistory { minute });
    }
    for m in (minute - MAX_LOOKBACK)..=minute {
        if !tl.state(m).is_some_and(MinuteState::is_complete) {
            return Err(Error::UnusableMinute { minute, reason: "incomplete minute in look-back" });
        }
    }
    Ok(())
}

pub fn compute_feature(tl: &Timeline, spec: &FeatureSpec, minute: i64) -> Result<f64> {
    let q = spec.quantity;
    Ok(match spec.stat {
        Stat::Instant => instant(tl, q, minute)?,
        Stat::Average(w) => window_sum(tl, q, minute, w)? / w as f64,
        Stat::Variation(w) => instant(tl, q, minute)? - instant(tl, q, minute - w as i64)?,
        Stat::Rate(w) => window_sum(tl, q, minute, w)? / w as f64,
        Stat::Count(w) => window_sum(tl, q, minute, w)?,
        Stat::Elapsed(k) => elapsed(tl, q, minute, k),
    })
}

pub fn compute_feature_vector(tl: &Timeline, minute: i64) -> Result<FeatureVector> {
    check_usable(tl, minute)?;
    let values = catalog().iter().map(|spec| compute_feature(tl, spec, minute)).collect::<Result<Vec<_>>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(FeatureVector { minute, values })
}

/// Which minutes of a timeline enter the feature table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableFilter {
    /// Keep only minutes whose runway configuration matches.
    pub config_id: Option<String>,
    /// Keep only local minutes of day in `[start, end)`.
    pub day_window: Option<(i64, i64)>,
}

impl TableFilter {
    pub fn accepts(&self, tl: &Timeline, minute: i64) -> bool {
        if let Some((lo, hi)) = self.day_window {
            let tod = tl.clock().minute_of_day(minute);
            if tod < lo || tod >= hi {
                return false;
            }
        }
        match (&self.config_id, tl.state(minute).and_then(|s| s.weather.as_ref())) {
            (Some(want), Some(w)) => &w.config_id == want,
            (Some(_), None) => false,
            (None, _) => true,
        }
    }
}

/// Feature vectors for every usable minute passing `filter`, in minute order.
pub fn build_feature_table(tl: &Timeline, filter: &TableFilter) -> Vec<FeatureVector> {
    (tl.start..tl.end)
        .into_par_iter()
        .filter(|&m| filter.accepts(tl, m) && check_usable(tl, m).is_ok())
        .filter_map(|m| compute_feature_vector(tl, m).ok())
        .collect()
}

pub fn feature_header() -> Vec<String> {
    std::iter::once("minute".to_string()).chain((1..=FEATURE_COUNT).map(|i| format!("f{i}"))).collect()
}

/// Writes `minute,f1..f135`.
pub fn write_features<W: Write>(sink: W, rows: &[FeatureVector]) -> Result<()> {
    let err = |e: csv::Error| Error::Format { path: "features.csv".into(), msg: e.to_string() };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(feature_header()).map_err(err)?;
    let mut record = Vec::with_capacity(FEATURE_COUNT + 1);
    for row in rows {
        record.clear();
        record.push(row.minute.to_string());
        record.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format { path: "features.csv".into(), msg: e.to_string() })
}

/// Parses a `minute,f1..f135` table.
pub fn read_features<R: Read>(source: R, file: &str) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers().map_err(|e| Error::Format { path: file.into(), msg: e.to_string() })?.clone();
    if headers.len() != FEATURE_COUNT + 1 || headers.get(0) != Some("minute") {
        return Err(Error::Format { path: file.into(), msg: format!("expected header minute,f1..f{FEATURE_COUNT}") });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |msg: String| Error::MalformedRow { file: file.into(), row: line, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let minute = rec.get(0).unwrap_or("").parse::<i64>().map_err(|e| bad(e.to_string()))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureVector { minute, values });
    }
    Ok(rows)
}
