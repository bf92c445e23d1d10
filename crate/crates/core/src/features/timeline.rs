use std::collections::HashMap;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::airport::{Airport, WeightClass};
use crate::error::{Error, Result};
use crate::ingest::{FlightRecord, SynchronizedDataset, WeatherRecord};
use crate::time::{minute_of, Clock};

use super::delay_minutes;
use super::Direction;

/// Aircraft type designator to wake category. Unknown types are large.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightClassMap {
    map: HashMap<String, WeightClass>,
}

impl Default for WeightClassMap {
    fn default() -> Self {
        use WeightClass::*;
        let table: &[(&str, WeightClass)] = &[
            ("C172", Small),
            ("C208", Small),
            ("BE20", Small),
            ("PC12", Small),
            ("E120", Small),
            ("B737", Large),
            ("B738", Large),
            ("B739", Large),
            ("A319", Large),
            ("A320", Large),
            ("A321", Large),
            ("E175", Large),
            ("CRJ7", Large),
            ("B752", Large),
            ("B744", Heavy),
            ("B763", Heavy),
            ("B772", Heavy),
            ("B77W", Heavy),
            ("B788", Heavy),
            ("A332", Heavy),
            ("A343", Heavy),
            ("A388", Heavy),
        ];
        WeightClassMap { map: table.iter().map(|(t, c)| (t.to_string(), *c)).collect() }
    }
}

impl WeightClassMap {
    pub fn empty() -> Self {
        WeightClassMap { map: HashMap::new() }
    }

    pub fn insert(&mut self, aircraft_type: &str, class: WeightClass) {
        self.map.insert(aircraft_type.trim().to_ascii_uppercase(), class);
    }

    pub fn class_of(&self, aircraft_type: Option<&str>) -> WeightClass {
        aircraft_type
            .and_then(|t| self.map.get(&t.trim().to_ascii_uppercase()))
            .copied()
            .unwrap_or(WeightClass::Large)
    }

    /// Reads `ac_type,class` rows on top of the built-in table.
    pub fn extend_from_csv<R: Read>(&mut self, source: R) -> Result<()> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        for (i, rec) in rdr.records().enumerate() {
            let row = i as u64 + 2;
            let rec = rec.map_err(|e| Error::MalformedRow { file: "weight classes".into(), row, msg: e.to_string() })?;
            let (Some(t), Some(c)) = (rec.get(0), rec.get(1)) else {
                return Err(Error::MalformedRow { file: "weight classes".into(), row, msg: "expected 2 fields".into() });
            };
            let class = WeightClass::from_str(c)
                .map_err(|msg| Error::MalformedRow { file: "weight classes".into(), row, msg })?;
            self.insert(t, class);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub utc_offset_min: i64,
    /// Runway heading for the headwind/crosswind split, degrees true.
    pub runway_heading_deg: f64,
    /// Value of "time elapsed" fields when fewer than k events exist.
    pub elapsed_cap_min: f64,
    /// Taxi-in duration assumed when a record lacks gate arrival.
    pub default_taxi_in_min: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            utc_offset_min: Clock::default().utc_offset_min,
            runway_heading_deg: 284.0,
            elapsed_cap_min: 120.0,
            default_taxi_in_min: 8.0,
        }
    }
}

impl FeatureOptions {
    pub fn clock(&self) -> Clock {
        Clock::new(self.utc_offset_min)
    }
}

/// Airport state during one minute.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MinuteState {
    pub minute: i64,
    /// Airborne aircraft within radar range bound for each airport.
    pub inbound: [u32; 3],
    /// Airborne aircraft within radar range that departed each airport.
    pub outbound: [u32; 3],
    /// Landings per airport, per weight class.
    pub landings: [[u32; 3]; 3],
    pub takeoffs: [[u32; 3]; 3],
    pub taxi_in: u32,
    pub taxi_out: u32,
    /// Delays (minutes) of SFO arrivals taxiing in whose delay is known.
    pub delays_in: Vec<f64>,
    /// Delays (minutes) of SFO departures taxiing out whose delay is known.
    pub delays_out: Vec<f64>,
    pub weather: Option<WeatherRecord>,
}

impl MinuteState {
    pub fn is_complete(&self) -> bool {
        self.weather.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Timeline {
    pub start: i64,
    pub end: i64,
    pub options: FeatureOptions,
    states: Vec<MinuteState>,
    /// Sorted landing / takeoff timestamps per airport, over all records.
    landing_times: [Vec<f64>; 3],
    takeoff_times: [Vec<f64>; 3],
}

impl Timeline {
    pub fn state(&self, minute: i64) -> Option<&MinuteState> {
        if minute < self.start || minute >= self.end {
            return None;
        }
        self.states.get((minute - self.start) as usize)
    }

    pub fn states(&self) -> &[MinuteState] {
        &self.states
    }

    pub fn landing_times(&self, airport: Airport) -> &[f64] {
        &self.landing_times[airport.index()]
    }

    pub fn takeoff_times(&self, airport: Airport) -> &[f64] {
        &self.takeoff_times[airport.index()]
    }

    pub fn clock(&self) -> Clock {
        self.options.clock()
    }
}

fn taxi_span(from: f64, to: f64) -> std::ops::Range<i64> {
    minute_of(from)..minute_of(to)
}

/// Builds the per-minute airport state over the dataset's span.
pub fn build_timeline(ds: &SynchronizedDataset, classes: &WeightClassMap, options: &FeatureOptions) -> Timeline {
    let (start, end) = (ds.start, ds.end);
    let mut states: Vec<MinuteState> =
        (start..end).map(|minute| MinuteState { minute, ..MinuteState::default() }).collect();
    let slot = |m: i64| -> Option<usize> { (m >= start && m < end).then(|| (m - start) as usize) };

    for track in &ds.tracks {
        let dest = track.destination_airport();
        let origin = track.origin_airport();
        let mut last_minute = None;
        for p in &track.points {
            let m = minute_of(p.t);
            if last_minute == Some(m) {
                continue;
            }
            last_minute = Some(m);
            let Some(i) = slot(m) else { continue };
            if let Some(a) = dest {
                states[i].inbound[a.index()] += 1;
            }
            if let Some(a) = origin {
                states[i].outbound[a.index()] += 1;
            }
        }
    }

    let mut landing_times: [Vec<f64>; 3] = Default::default();
    let mut takeoff_times: [Vec<f64>; 3] = Default::default();
    for rec in &ds.flights {
        let a = rec.airport.index();
        let class = classes.class_of(rec.aircraft_type.as_deref()).index();
        if let Some(t) = rec.act_wheels_on {
            landing_times[a].push(t);
            if let Some(i) = slot(minute_of(t)) {
                states[i].landings[a][class] += 1;
            }
        }
        if let Some(t) = rec.act_wheels_off {
            takeoff_times[a].push(t);
            if let Some(i) = slot(minute_of(t)) {
                states[i].takeoffs[a][class] += 1;
            }
        }
        if rec.airport == Airport::Sfo {
            add_taxi(&mut states, start, end, rec, options);
        }
    }
    for v in landing_times.iter_mut().chain(takeoff_times.iter_mut()) {
        v.sort_by(f64::total_cmp);
    }

    for (m, w) in &ds.weather {
        if let Some(i) = slot(*m) {
            states[i].weather = Some(w.clone());
        }
    }

    Timeline { start, end, options: options.clone(), states, landing_times, takeoff_times }
}

fn add_taxi(states: &mut [MinuteState], start: i64, end: i64, rec: &FlightRecord, options: &FeatureOptions) {
    if let (Some(out), Some(off)) = (rec.act_gate_out, rec.act_wheels_off) {
        let delay = delay_minutes(rec, Direction::Out);
        for m in taxi_span(out, off) {
            if m >= start && m < end {
                let s = &mut states[(m - start) as usize];
                s.taxi_out += 1;
                if let Some(d) = delay {
                    s.delays_out.push(d);
                }
            }
        }
    }
    if let Some(on) = rec.act_wheels_on {
        let gate_in = rec.act_gate_in.unwrap_or(on + options.default_taxi_in_min * 60.0);
        let delay = delay_minutes(rec, Direction::In);
        for m in taxi_span(on, gate_in) {
            if m >= start && m < end {
                let s = &mut states[(m - start) as usize];
                s.taxi_in += 1;
                if let Some(d) = delay {
                    s.delays_in.push(d);
                }
            }
        }
    }
}
