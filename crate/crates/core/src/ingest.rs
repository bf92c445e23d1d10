//! Parsing and cleaning of the three input sources: radar tracks, ASPM-style
//! flight movement records, and per-minute weather/runway state.
//!
//! Positions are planar: nautical miles in a local tangent plane centered on
//! the radar site. Ceiling and visibility are clipped on the way in.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::Deserialize;

use crate::airport::Airport;
use crate::error::{Error, Result};
use crate::time::minute_of;

pub const CEILING_CAP_FT: f64 = 10_000.0;
pub const VISIBILITY_CAP_NMI: f64 = 10.0;

pub const TRACKS_HEADER: [&str; 7] = ["flight_id", "origin", "dest", "t", "x_nm", "y_nm", "alt_ft"];
pub const FLIGHTS_HEADER: [&str; 7] =
    ["flight_id", "airport", "sched_out", "act_out", "act_off", "act_on", "sched_on"];
/// Optional trailing columns of `flights.csv`.
pub const FLIGHTS_OPTIONAL: [&str; 2] = ["act_in", "ac_type"];
pub const WEATHER_HEADER: [&str; 10] = [
    "minute",
    "vmc",
    "ceiling_ft",
    "visibility_nmi",
    "temp",
    "wind_deg",
    "wind_kt",
    "arr_rwys",
    "dep_rwys",
    "config_id",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub alt: f64,
}

impl TrackPoint {
    pub fn range_nm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarTrack {
    pub flight_id: String,
    pub origin: String,
    pub destination: String,
    pub points: Vec<TrackPoint>,
}

impl RadarTrack {
    pub fn origin_airport(&self) -> Option<Airport> {
        Airport::from_code(&self.origin)
    }

    pub fn destination_airport(&self) -> Option<Airport> {
        Airport::from_code(&self.destination)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightRecord {
    pub flight_id: String,
    pub airport: Airport,
    pub sched_gate_out: Option<f64>,
    pub act_gate_out: Option<f64>,
    pub act_wheels_off: Option<f64>,
    pub act_wheels_on: Option<f64>,
    pub sched_wheels_on: Option<f64>,
    /// Gate arrival; closes the taxi-in interval.
    pub act_gate_in: Option<f64>,
    pub aircraft_type: Option<String>,
}

impl FlightRecord {
    fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        [
            self.sched_gate_out,
            self.act_gate_out,
            self.act_wheels_off,
            self.act_wheels_on,
            self.sched_wheels_on,
            self.act_gate_in,
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherRecord {
    pub minute: i64,
    pub vmc: bool,
    pub ceiling: f64,
    pub visibility: f64,
    pub temperature: Option<f64>,
    pub wind_angle: f64,
    pub wind_speed: f64,
    pub arr_runways: u32,
    pub dep_runways: u32,
    pub config_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    pub radius_nm: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        RadarConfig { radius_nm: 45.0, origin_x: 0.0, origin_y: 0.0 }
    }
}

impl RadarConfig {
    pub fn contains(&self, p: &TrackPoint) -> bool {
        (p.x - self.origin_x).hypot(p.y - self.origin_y) <= self.radius_nm
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackParse {
    pub tracks: Vec<RadarTrack>,
    /// Flights discarded for non-increasing timestamps.
    pub non_monotone: usize,
    /// Flights with fewer than two points left inside the radar radius.
    pub out_of_range: usize,
    /// Flights not touching SFO, OAK or SJC.
    pub foreign: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlightParse {
    pub records: Vec<FlightRecord>,
    /// Rows for airports other than the three studied ones.
    pub skipped: usize,
}

fn check_header(file: &str, headers: &csv::StringRecord, required: &[&str]) -> Result<()> {
    for column in required {
        if !headers.iter().any(|h| h.trim() == *column) {
            return Err(Error::MissingColumn { file: file.to_string(), column: column.to_string() });
        }
    }
    Ok(())
}

fn row_error(file: &str, err: csv::Error) -> Error {
    let row = err.position().map(|p| p.line()).unwrap_or(0);
    let msg = match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => err.to_string(),
    };
    Error::MalformedRow { file: file.to_string(), row, msg }
}

/// Deserializes every row and hands it to `visit` with its line number.
fn for_each_row<R: Read, T: serde::de::DeserializeOwned>(
    file: &str,
    rdr: &mut csv::Reader<R>,
    headers: &csv::StringRecord,
    mut visit: impl FnMut(u64, T) -> Result<()>,
) -> Result<()> {
    for result in rdr.records() {
        let record = result.map_err(|e| row_error(file, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record.deserialize(Some(headers)).map_err(|e| match row_error(file, e) {
            Error::MalformedRow { file, msg, .. } => Error::MalformedRow { file, row: line, msg },
            other => other,
        })?;
        visit(line, row)?;
    }
    Ok(())
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source)
}

#[derive(Debug, Deserialize)]
struct TrackRow {
    flight_id: String,
    origin: String,
    dest: String,
    t: f64,
    x_nm: f64,
    y_nm: f64,
    alt_ft: f64,
}

/// Parses `tracks.csv`, keeping only points inside the radar radius and
/// flights touching one of the three airports.
pub fn parse_tracks<R: Read>(source: R, radar: &RadarConfig) -> Result<TrackParse> {
    const FILE: &str = "tracks.csv";
    let mut rdr = reader(source);
    let headers = rdr.headers().map_err(|e| row_error(FILE, e))?.clone();
    check_header(FILE, &headers, &TRACKS_HEADER)?;

    struct Pending {
        origin: String,
        dest: String,
        points: Vec<TrackPoint>,
        monotone: bool,
    }
    let mut order: Vec<String> = Vec::new();
    let mut flights: HashMap<String, Pending> = HashMap::new();

    for_each_row(FILE, &mut rdr, &headers, |line, row: TrackRow| {
        let malformed = |msg: String| Error::MalformedRow { file: FILE.into(), row: line, msg };
        if !(row.t.is_finite() && row.x_nm.is_finite() && row.y_nm.is_finite() && row.alt_ft.is_finite()) {
            return Err(malformed("non-finite value".into()));
        }
        if row.alt_ft < 0.0 {
            return Err(malformed(format!("negative altitude {}", row.alt_ft)));
        }
        let entry = flights.entry(row.flight_id.clone()).or_insert_with(|| {
            order.push(row.flight_id.clone());
            Pending { origin: row.origin.clone(), dest: row.dest.clone(), points: Vec::new(), monotone: true }
        });
        if let Some(last) = entry.points.last() {
            if row.t <= last.t {
                entry.monotone = false;
            }
        }
        entry.points.push(TrackPoint { t: row.t, x: row.x_nm, y: row.y_nm, alt: row.alt_ft });
        Ok(())
    })?;

    let mut out = TrackParse::default();
    for id in order {
        let pending = flights.remove(&id).expect("flight registered in order");
        if Airport::from_code(&pending.origin).is_none() && Airport::from_code(&pending.dest).is_none() {
            out.foreign += 1;
            continue;
        }
        if !pending.monotone {
            log::warn!("discarding flight {id}: timestamps not strictly increasing");
            out.non_monotone += 1;
            continue;
        }
        let points: Vec<TrackPoint> = pending.points.into_iter().filter(|p| radar.contains(p)).collect();
        if points.len() < 2 {
            out.out_of_range += 1;
            continue;
        }
        out.tracks.push(RadarTrack { flight_id: id, origin: pending.origin, destination: pending.dest, points });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct FlightRow {
    flight_id: String,
    airport: String,
    sched_out: Option<f64>,
    act_out: Option<f64>,
    act_off: Option<f64>,
    act_on: Option<f64>,
    sched_on: Option<f64>,
    #[serde(default)]
    act_in: Option<f64>,
    #[serde(default)]
    ac_type: Option<String>,
}

/// Parses `flights.csv`. Empty fields are missing values. The optional
/// `act_in` and `ac_type` columns carry gate arrival and aircraft type.
pub fn parse_flights<R: Read>(source: R) -> Result<FlightParse> {
    const FILE: &str = "flights.csv";
    let mut rdr = reader(source);
    let headers = rdr.headers().map_err(|e| row_error(FILE, e))?.clone();
    check_header(FILE, &headers, &FLIGHTS_HEADER)?;

    let mut out = FlightParse::default();
    for_each_row(FILE, &mut rdr, &headers, |line, row: FlightRow| {
        let malformed = |msg: String| Error::MalformedRow { file: FILE.into(), row: line, msg };
        let Some(airport) = Airport::from_code(&row.airport) else {
            out.skipped += 1;
            return Ok(());
        };
        let rec = FlightRecord {
            flight_id: row.flight_id,
            airport,
            sched_gate_out: row.sched_out,
            act_gate_out: row.act_out,
            act_wheels_off: row.act_off,
            act_wheels_on: row.act_on,
            sched_wheels_on: row.sched_on,
            act_gate_in: row.act_in,
            aircraft_type: row.ac_type.filter(|s| !s.is_empty()),
        };
        if rec.timestamps().any(|t| !t.is_finite()) {
            return Err(malformed("non-finite timestamp".into()));
        }
        if let (Some(out_t), Some(off_t)) = (rec.act_gate_out, rec.act_wheels_off) {
            if out_t > off_t {
                return Err(malformed(format!("{}: gate-out after wheels-off", rec.flight_id)));
            }
        }
        if let (Some(on_t), Some(in_t)) = (rec.act_wheels_on, rec.act_gate_in) {
            if on_t > in_t {
                return Err(malformed(format!("{}: wheels-on after gate-in", rec.flight_id)));
            }
        }
        out.records.push(rec);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct WeatherRow {
    minute: i64,
    vmc: String,
    ceiling_ft: f64,
    visibility_nmi: f64,
    temp: Option<f64>,
    wind_deg: f64,
    wind_kt: f64,
    arr_rwys: u32,
    dep_rwys: u32,
    config_id: String,
}

fn parse_vmc(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "vmc" => Some(true),
        "0" | "false" | "imc" => Some(false),
        _ => None,
    }
}

/// Parses `weather.csv`, sorting by minute and clipping ceiling and
/// visibility to their reporting caps.
pub fn parse_weather<R: Read>(source: R) -> Result<Vec<WeatherRecord>> {
    const FILE: &str = "weather.csv";
    let mut rdr = reader(source);
    let headers = rdr.headers().map_err(|e| row_error(FILE, e))?.clone();
    check_header(FILE, &headers, &WEATHER_HEADER)?;

    let mut records = Vec::new();
    for_each_row(FILE, &mut rdr, &headers, |line, row: WeatherRow| {
        let malformed = |msg: String| Error::MalformedRow { file: FILE.into(), row: line, msg };
        let vmc = parse_vmc(&row.vmc).ok_or_else(|| malformed(format!("bad vmc flag `{}`", row.vmc)))?;
        let values = [row.ceiling_ft, row.visibility_nmi, row.wind_deg, row.wind_kt];
        if values.iter().any(|v| !v.is_finite()) || row.temp.is_some_and(|t| !t.is_finite()) {
            return Err(malformed("non-finite value".into()));
        }
        if row.ceiling_ft < 0.0 || row.visibility_nmi < 0.0 || row.wind_kt < 0.0 {
            return Err(malformed("negative ceiling, visibility or wind speed".into()));
        }
        records.push(WeatherRecord {
            minute: row.minute,
            vmc,
            ceiling: row.ceiling_ft.min(CEILING_CAP_FT),
            visibility: row.visibility_nmi.min(VISIBILITY_CAP_NMI),
            temperature: row.temp,
            wind_angle: row.wind_deg.rem_euclid(360.0),
            wind_speed: row.wind_kt,
            arr_runways: row.arr_rwys,
            dep_runways: row.dep_rwys,
            config_id: row.config_id,
        });
        Ok(())
    })?;
    records.sort_by_key(|r| r.minute);
    if let Some(w) = records.windows(2).find(|w| w[0].minute == w[1].minute) {
        return Err(Error::MalformedRow {
            file: FILE.into(),
            row: 0,
            msg: format!("duplicate minute {}", w[0].minute),
        });
    }
    Ok(records)
}

/// Fills missing temperatures by linear interpolation in time between the
/// nearest present neighbours; leading and trailing gaps copy the nearest
/// present value.
pub fn interpolate_temperature(mut records: Vec<WeatherRecord>) -> Result<Vec<WeatherRecord>> {
    let present: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.temperature.is_some())
        .map(|(i, _)| i)
        .collect();
    let (Some(&first), Some(&last)) = (present.first(), present.last()) else {
        return Err(Error::TemperatureChannelEmpty);
    };

    let first_temp = records[first].temperature;
    let last_temp = records[last].temperature;
    for r in &mut records[..first] {
        r.temperature = first_temp;
    }
    for r in &mut records[last + 1..] {
        r.temperature = last_temp;
    }
    for pair in present.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo < 2 {
            continue;
        }
        let (m0, v0) = (records[lo].minute as f64, records[lo].temperature.unwrap());
        let (m1, v1) = (records[hi].minute as f64, records[hi].temperature.unwrap());
        for r in &mut records[lo + 1..hi] {
            let frac = (r.minute as f64 - m0) / (m1 - m0);
            r.temperature = Some(v0 + frac * (v1 - v0));
        }
    }
    Ok(records)
}

/// Minute-indexed view over the intersection of the three sources' time
/// coverage.
#[derive(Debug, Clone)]
pub struct SynchronizedDataset {
    /// First minute of the common span.
    pub start: i64,
    /// One past the last minute of the common span.
    pub end: i64,
    pub tracks: Vec<RadarTrack>,
    pub flights: Vec<FlightRecord>,
    /// Weather by minute, restricted to the span.
    pub weather: BTreeMap<i64, WeatherRecord>,
}

impl SynchronizedDataset {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// A minute is complete when every source covers it.
    pub fn is_complete(&self, minute: i64) -> bool {
        minute >= self.start && minute < self.end && self.weather.contains_key(&minute)
    }

    pub fn usable_minutes(&self) -> impl Iterator<Item = i64> + '_ {
        self.weather.keys().copied()
    }

    pub fn incomplete_count(&self) -> usize {
        self.len() - self.weather.len()
    }
}

/// Intersects the covered time ranges of the three sources. Minutes inside
/// the span without a weather record are incomplete.
pub fn synchronize(
    tracks: Vec<RadarTrack>,
    flights: Vec<FlightRecord>,
    weather: Vec<WeatherRecord>,
) -> Result<SynchronizedDataset> {
    let track_range = tracks
        .iter()
        .flat_map(|t| t.points.iter())
        .map(|p| minute_of(p.t))
        .fold(None, widen);
    let flight_range = flights.iter().flat_map(|f| f.timestamps()).map(minute_of).fold(None, widen);
    let weather_range = weather.iter().map(|w| w.minute).fold(None, widen);

    let (Some(tr), Some(fr), Some(wr)) = (track_range, flight_range, weather_range) else {
        return Err(Error::EmptyIntersection);
    };
    let start = tr.0.max(fr.0).max(wr.0);
    let end = tr.1.min(fr.1).min(wr.1) + 1;
    if end <= start {
        return Err(Error::EmptyIntersection);
    }
    let weather = weather
        .into_iter()
        .filter(|w| w.minute >= start && w.minute < end)
        .map(|w| (w.minute, w))
        .collect();
    Ok(SynchronizedDataset { start, end, tracks, flights, weather })
}

fn widen(acc: Option<(i64, i64)>, m: i64) -> Option<(i64, i64)> {
    Some(match acc {
        None => (m, m),
        Some((lo, hi)) => (lo.min(m), hi.max(m)),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_err(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Format { path: path.into(), msg: e.to_string() }
}

pub fn write_tracks<W: Write>(sink: W, tracks: &[RadarTrack]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRACKS_HEADER).map_err(|e| write_err("tracks.csv", e))?;
    for track in tracks {
        for p in &track.points {
            w.write_record([
                track.flight_id.as_str(),
                &track.origin,
                &track.destination,
                &p.t.to_string(),
                &p.x.to_string(),
                &p.y.to_string(),
                &p.alt.to_string(),
            ])
            .map_err(|e| write_err("tracks.csv", e))?;
        }
    }
    w.flush().map_err(|e| write_err("tracks.csv", e))
}

/// Writes `flights.csv` including the optional `act_in` and `ac_type` columns.
pub fn write_flights<W: Write>(sink: W, flights: &[FlightRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let header: Vec<&str> = FLIGHTS_HEADER.iter().chain(FLIGHTS_OPTIONAL.iter()).copied().collect();
    w.write_record(&header).map_err(|e| write_err("flights.csv", e))?;
    for f in flights {
        w.write_record([
            f.flight_id.clone(),
            f.airport.code().to_string(),
            opt(f.sched_gate_out),
            opt(f.act_gate_out),
            opt(f.act_wheels_off),
            opt(f.act_wheels_on),
            opt(f.sched_wheels_on),
            opt(f.act_gate_in),
            f.aircraft_type.clone().unwrap_or_default(),
        ])
        .map_err(|e| write_err("flights.csv", e))?;
    }
    w.flush().map_err(|e| write_err("flights.csv", e))
}

pub fn write_weather<W: Write>(sink: W, weather: &[WeatherRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(WEATHER_HEADER).map_err(|e| write_err("weather.csv", e))?;
    for r in weather {
        w.write_record([
            r.minute.to_string(),
            (r.vmc as u8).to_string(),
            r.ceiling.to_string(),
            r.visibility.to_string(),
            opt(r.temperature),
            r.wind_angle.to_string(),
            r.wind_speed.to_string(),
            r.arr_runways.to_string(),
            r.dep_runways.to_string(),
            r.config_id.clone(),
        ])
        .map_err(|e| write_err("weather.csv", e))?;
    }
    w.flush().map_err(|e| write_err("weather.csv", e))
}
