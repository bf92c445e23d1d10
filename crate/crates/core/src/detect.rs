//! Go-around detection on individual radar tracks.
//!
//! A go-around is a run of `climb_run` climbing samples that immediately
//! follows `descent_run` descending samples, with the first climbing sample
//! inside the terminal phase. A sample "climbs" when its altitude exceeds
//! the previous sample's altitude.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RadarTrack;
use crate::time::Clock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MonotoneMode {
    /// Every sample-to-sample difference has the required sign.
    #[default]
    Strict,
    /// Plateaus allowed, as long as the run has at least one signed step.
    NonStrict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub descent_run: usize,
    pub climb_run: usize,
    pub terminal_range_nm: f64,
    pub terminal_alt_ft: f64,
    pub monotone_mode: MonotoneMode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            descent_run: 10,
            climb_run: 15,
            terminal_range_nm: 45.0,
            terminal_alt_ft: 10_000.0,
            monotone_mode: MonotoneMode::Strict,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.descent_run < 2 || self.climb_run < 2 {
            return Err(Error::InvalidConfig("descent_run and climb_run must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaEvent {
    pub flight_id: String,
    /// Time of the first climbing sample.
    pub t_ga: f64,
    pub point_index: usize,
    pub descent_start_index: usize,
    pub climb_end_index: usize,
}

/// Whether the diffs in `steps` form a run in the requested direction.
fn is_run(steps: &[f64], rising: bool, mode: MonotoneMode) -> bool {
    let signed = |d: f64| if rising { d > 0.0 } else { d < 0.0 };
    match mode {
        MonotoneMode::Strict => steps.iter().all(|&d| signed(d)),
        MonotoneMode::NonStrict => {
            steps.iter().all(|&d| d == 0.0 || signed(d)) && steps.iter().any(|&d| signed(d))
        }
    }
}

fn step_continues(d: f64, mode: MonotoneMode) -> bool {
    match mode {
        MonotoneMode::Strict => d > 0.0,
        MonotoneMode::NonStrict => d >= 0.0,
    }
}

pub fn detect_ga(track: &RadarTrack, cfg: &DetectorConfig) -> Vec<GaEvent> {
    let pts = &track.points;
    let n = pts.len();
    // steps[k] = alt[k+1] - alt[k]; sample i climbs when steps[i-1] > 0.
    let steps: Vec<f64> = pts.windows(2).map(|w| w[1].alt - w[0].alt).collect();
    if n < cfg.descent_run + cfg.climb_run + 1 {
        return Vec::new();
    }

    let mut events: Vec<GaEvent> = Vec::new();
    for i in (cfg.descent_run + 1)..=(n - cfg.climb_run) {
        if let Some(last) = events.last() {
            if i <= last.climb_end_index {
                continue;
            }
        }
        let p = &pts[i];
        if p.range_nm() > cfg.terminal_range_nm || p.alt > cfg.terminal_alt_ft {
            continue;
        }
        let climb = &steps[i - 1..i - 1 + cfg.climb_run];
        let descent = &steps[i - 1 - cfg.descent_run..i - 1];
        if !is_run(climb, true, cfg.monotone_mode) || !is_run(descent, false, cfg.monotone_mode) {
            continue;
        }
        let mut climb_end = i + cfg.climb_run - 1;
        while climb_end < n - 1 && step_continues(steps[climb_end], cfg.monotone_mode) {
            climb_end += 1;
        }
        events.push(GaEvent {
            flight_id: track.flight_id.clone(),
            t_ga: p.t,
            point_index: i,
            descent_start_index: i - cfg.descent_run,
            climb_end_index: climb_end,
        });
    }
    events
}

/// Index ranges of a track around a go-around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    pub pre_ga: Range<usize>,
    pub final_descent: Range<usize>,
    /// Inclusive of `climb_end_index`.
    pub climb: Range<usize>,
    pub remainder: Range<usize>,
}

impl Segments {
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        [&self.pre_ga, &self.final_descent, &self.climb, &self.remainder].into_iter().flat_map(|r| r.clone())
    }
}

pub fn segment(track: &RadarTrack, event: &GaEvent) -> Result<Segments> {
    let n = track.points.len();
    let ok = event.descent_start_index < event.point_index
        && event.point_index <= event.climb_end_index
        && event.climb_end_index < n;
    if !ok {
        return Err(Error::EventOutOfRange { flight_id: track.flight_id.clone() });
    }
    Ok(Segments {
        pre_ga: 0..event.descent_start_index,
        final_descent: event.descent_start_index..event.point_index,
        climb: event.point_index..event.climb_end_index + 1,
        remainder: event.climb_end_index + 1..n,
    })
}

/// Go-around counts keyed by local (year, quarter).
pub fn quarterly_counts(events: &[GaEvent], clock: &Clock) -> BTreeMap<(i32, u8), usize> {
    let mut counts = BTreeMap::new();
    for e in events {
        *counts.entry(clock.year_quarter(e.t_ga)).or_insert(0) += 1;
    }
    counts
}

pub const EVENTS_HEADER: [&str; 5] = ["flight_id", "t_ga", "point_index", "descent_start_index", "climb_end_index"];

/// Writes `flight_id,t_ga,point_index` plus the two run boundaries.
pub fn write_events<W: Write>(sink: W, events: &[GaEvent]) -> Result<()> {
    let err = |e: csv::Error| Error::Format { path: "ga_events.csv".into(), msg: e.to_string() };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(EVENTS_HEADER).map_err(err)?;
    for e in events {
        w.write_record([
            e.flight_id.clone(),
            e.t_ga.to_string(),
            e.point_index.to_string(),
            e.descent_start_index.to_string(),
            e.climb_end_index.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format { path: "ga_events.csv".into(), msg: e.to_string() })
}

/// Reads an events table. The two boundary columns are optional; when
/// absent they default to the go-around point itself.
pub fn read_events<R: Read>(source: R, file: &str) -> Result<Vec<GaEvent>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers().map_err(|e| Error::Format { path: file.into(), msg: e.to_string() })?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id), Some(t), Some(pi)) = (col("flight_id"), col("t_ga"), col("point_index")) else {
        return Err(Error::MissingColumn { file: file.into(), column: "flight_id,t_ga,point_index".into() });
    };
    let (ds, ce) = (col("descent_start_index"), col("climb_end_index"));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |msg: String| Error::MalformedRow { file: file.into(), row: line, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let index = |k: Option<usize>, default: usize| -> Result<usize> {
            match k.map(field) {
                Some(v) if !v.is_empty() => v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string())),
                _ => Ok(default),
            }
        };
        let t_ga: f64 = field(t).parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        if !t_ga.is_finite() {
            return Err(bad("t_ga must be finite".into()));
        }
        let point_index = index(Some(pi), 0)?;
        out.push(GaEvent {
            flight_id: field(id).to_string(),
            t_ga,
            point_index,
            descent_start_index: index(ds, point_index)?,
            climb_end_index: index(ce, point_index)?,
        });
    }
    Ok(out)
}
