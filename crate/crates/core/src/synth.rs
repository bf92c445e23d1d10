//! Seeded synthetic scenarios: straight-in approaches and departures at the
//! three airports, per-minute weather, flight movement records, and
//! go-arounds injected by a logistic hazard model with known ground truth.
//!
//! Positions use the radar-centred plane of [`crate::ingest`]. Bearings are
//! degrees clockwise from north, measured from the airport to the aircraft.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::airport::{Airport, WeightClass};
use crate::error::{Error, Result};
use crate::ingest::{FlightRecord, RadarConfig, RadarTrack, TrackPoint, WeatherRecord};
use crate::seed::stage_seed;
use crate::time::{minute_of, Clock, MINUTES_PER_DAY};

/// Runway configuration the study restricts itself to.
pub const STUDY_CONFIG: &str = "28LR_01LR";
/// The configuration used during occasional south-flow periods.
pub const ALT_CONFIG: &str = "19LR_10LR";
/// 2015-01-01 00:00 Pacific standard time.
pub const DEFAULT_START: i64 = 1_420_099_200;

const GLIDE_FT_PER_NM: f64 = 300.0;
const DEPARTURE_CLIMB_FPM: f64 = 2500.0;
const DEPARTURE_TRACK_NM: f64 = 15.0;
const OTHER_ENDS: [&str; 8] = ["LAX", "SEA", "DEN", "ORD", "JFK", "PHX", "LAS", "SAN"];

struct Geometry {
    x: f64,
    y: f64,
    approach_bearing: f64,
    approach_nm: (f64, f64),
    departure_bearing: f64,
}

fn geometry(a: Airport) -> Geometry {
    match a {
        Airport::Sfo => Geometry { x: -8.0, y: -5.0, approach_bearing: 104.0, approach_nm: (25.0, 35.0), departure_bearing: 10.0 },
        Airport::Oak => Geometry { x: 1.0, y: -2.0, approach_bearing: 120.0, approach_nm: (20.0, 30.0), departure_bearing: 300.0 },
        Airport::Sjc => Geometry { x: 20.0, y: -28.0, approach_bearing: 330.0, approach_nm: (16.0, 22.0), departure_bearing: 300.0 },
    }
}

fn types_of(class: WeightClass) -> &'static [&'static str] {
    match class {
        WeightClass::Small => &["C208", "PC12", "BE20"],
        WeightClass::Large => &["A320", "B738", "E175", "A319"],
        WeightClass::Heavy => &["B772", "B788", "A332"],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rates {
    pub arrivals_per_hour: f64,
    pub departures_per_hour: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates { arrivals_per_hour: 10.0, departures_per_hour: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Traffic {
    pub sfo: Rates,
    pub oak: Rates,
    pub sjc: Rates,
}

impl Default for Traffic {
    fn default() -> Self {
        Traffic {
            sfo: Rates { arrivals_per_hour: 30.0, departures_per_hour: 30.0 },
            oak: Rates::default(),
            sjc: Rates::default(),
        }
    }
}

impl Traffic {
    pub fn get(&self, a: Airport) -> Rates {
        match a {
            Airport::Sfo => self.sfo,
            Airport::Oak => self.oak,
            Airport::Sjc => self.sjc,
        }
    }
}

/// Per-approach go-around probability at SFO:
/// `logistic(logit(p0) + inbound_coef·(inbound − center) + lowvis_coef·(10 − vis) + peak)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HazardConfig {
    pub base_probability: f64,
    /// Per aircraft inbound to SFO.
    pub inbound_coef: f64,
    pub inbound_center: f64,
    /// Per nautical mile of visibility below 10.
    pub lowvis_coef: f64,
    /// Local hours that add `peak_coef`.
    pub peak_hours: Vec<u32>,
    pub peak_coef: f64,
}

impl Default for HazardConfig {
    fn default() -> Self {
        HazardConfig {
            base_probability: 0.01,
            inbound_coef: 0.0,
            inbound_center: 6.0,
            lowvis_coef: 0.0,
            peak_hours: Vec::new(),
            peak_coef: 0.0,
        }
    }
}

impl HazardConfig {
    pub fn probability(&self, inbound: f64, visibility: f64, local_hour: u32) -> f64 {
        let p0 = self.base_probability;
        if p0 <= 0.0 {
            return 0.0;
        }
        if p0 >= 1.0 {
            return 1.0;
        }
        let mut z = (p0 / (1.0 - p0)).ln()
            + self.inbound_coef * (inbound - self.inbound_center)
            + self.lowvis_coef * (10.0 - visibility);
        if self.peak_hours.contains(&local_hour) {
            z += self.peak_coef;
        }
        1.0 / (1.0 + (-z).exp())
    }
}

/// First-order autoregressive channel, clipped on output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1 {
    pub mean: f64,
    /// Per-minute persistence in `[0, 1)`.
    pub persistence: f64,
    /// Innovation standard deviation.
    pub noise: f64,
    pub min: f64,
    pub max: f64,
}

impl Ar1 {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = [self.mean, self.persistence, self.noise, self.min, self.max].iter().all(|v| v.is_finite())
            && (0.0..1.0).contains(&self.persistence)
            && self.noise >= 0.0
            && self.min <= self.max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "weather channel `{name}` needs persistence in [0,1), noise >= 0 and min <= max"
            )))
        }
    }

    fn step<R: Rng>(&self, x: f64, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(StandardNormal);
        self.mean + self.persistence * (x - self.mean) + self.noise * e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherConfig {
    pub visibility: Ar1,
    pub ceiling: Ar1,
    pub temperature: Ar1,
    pub wind_speed: Ar1,
    /// Wrapped to `[0, 360)` instead of clipped.
    pub wind_angle: Ar1,
    pub temperature_missing_prob: f64,
    /// Expected starts of an alternate runway configuration per day.
    pub alt_config_per_day: f64,
    pub alt_config_mean_min: f64,
    /// Expected weather outages (minutes without a record) per day.
    pub outages_per_day: f64,
    pub outage_mean_min: f64,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        WeatherConfig {
            visibility: Ar1 { mean: 8.5, persistence: 0.998, noise: 0.25, min: 0.0, max: 10.0 },
            ceiling: Ar1 { mean: 5000.0, persistence: 0.998, noise: 120.0, min: 0.0, max: 10_000.0 },
            temperature: Ar1 { mean: 15.0, persistence: 0.999, noise: 0.05, min: -10.0, max: 40.0 },
            wind_speed: Ar1 { mean: 10.0, persistence: 0.995, noise: 0.4, min: 0.0, max: 60.0 },
            wind_angle: Ar1 { mean: 290.0, persistence: 0.995, noise: 2.0, min: 0.0, max: 360.0 },
            temperature_missing_prob: 0.01,
            alt_config_per_day: 0.5,
            alt_config_mean_min: 120.0,
            outages_per_day: 0.5,
            outage_mean_min: 20.0,
        }
    }
}

/// Log-normal schedule deviations and taxi durations, in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayConfig {
    /// Deviation is `LogNormal(mu, sigma) - shift`; negative means early.
    pub deviation_mu: f64,
    pub deviation_sigma: f64,
    pub deviation_shift_min: f64,
    pub taxi_out_mu: f64,
    pub taxi_out_sigma: f64,
    pub taxi_in_mu: f64,
    pub taxi_in_sigma: f64,
}

impl Default for DelayConfig {
    fn default() -> Self {
        DelayConfig {
            deviation_mu: 1.6,
            deviation_sigma: 0.9,
            deviation_shift_min: 4.0,
            taxi_out_mu: 14f64.ln(),
            taxi_out_sigma: 0.3,
            taxi_in_mu: 7f64.ln(),
            taxi_in_sigma: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub duration_days: u32,
    pub seed: u64,
    /// UTC seconds of the first minute.
    pub start_time: i64,
    pub utc_offset_min: i64,
    pub sample_period_s: f64,
    /// Traffic multiplier between 23:00 and 06:00 local.
    pub night_factor: f64,
    /// Scales every approach's starting distance.
    pub approach_length_factor: f64,
    pub approach_speed_kt: f64,
    pub departure_speed_kt: f64,
    /// Small, large, heavy.
    pub weight_mix: [f64; 3],
    /// Go-around shape: descent samples required before the climb.
    pub ga_descent_run: usize,
    /// Go-around shape: minimum climbing samples.
    pub ga_climb_run: usize,
    pub traffic: Traffic,
    pub hazard: HazardConfig,
    pub weather: WeatherConfig,
    pub delays: DelayConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration_days: 3,
            seed: 0,
            start_time: DEFAULT_START,
            utc_offset_min: Clock::default().utc_offset_min,
            sample_period_s: 4.5,
            night_factor: 0.15,
            approach_length_factor: 1.0,
            approach_speed_kt: 150.0,
            departure_speed_kt: 200.0,
            weight_mix: [0.05, 0.8, 0.15],
            ga_descent_run: 10,
            ga_climb_run: 15,
            traffic: Traffic::default(),
            hazard: HazardConfig::default(),
            weather: WeatherConfig::default(),
            delays: DelayConfig::default(),
        }
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg.to_string()))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.sample_period_s.is_finite() && self.sample_period_s > 0.0, "sample_period_s must be positive")?;
        check(self.start_time % 60 == 0, "start_time must fall on a minute boundary")?;
        for a in Airport::ALL {
            let r = self.traffic.get(a);
            check(
                [r.arrivals_per_hour, r.departures_per_hour].iter().all(|v| v.is_finite() && *v >= 0.0),
                "traffic intensities must be non-negative",
            )?;
        }
        check((0.0..=1.0).contains(&self.hazard.base_probability), "hazard.base_probability must lie in [0, 1]")?;
        check(
            [self.hazard.inbound_coef, self.hazard.inbound_center, self.hazard.lowvis_coef, self.hazard.peak_coef]
                .iter()
                .all(|v| v.is_finite()),
            "hazard coefficients must be finite",
        )?;
        check(self.hazard.peak_hours.iter().all(|&h| h < 24), "hazard.peak_hours must be in 0..24")?;
        check(self.night_factor.is_finite() && self.night_factor >= 0.0, "night_factor must be non-negative")?;
        check(
            self.approach_length_factor > 0.0 && self.approach_length_factor <= 1.25,
            "approach_length_factor must lie in (0, 1.25]",
        )?;
        check(self.approach_speed_kt > 0.0 && self.departure_speed_kt > 0.0, "speeds must be positive")?;
        check(
            self.weight_mix.iter().all(|w| w.is_finite() && *w >= 0.0) && self.weight_mix.iter().sum::<f64>() > 0.0,
            "weight_mix must be non-negative with a positive sum",
        )?;
        check(self.ga_descent_run >= 2 && self.ga_climb_run >= 2, "go-around runs must be at least 2")?;
        let w = &self.weather;
        w.visibility.validate("visibility")?;
        w.ceiling.validate("ceiling")?;
        w.temperature.validate("temperature")?;
        w.wind_speed.validate("wind_speed")?;
        w.wind_angle.validate("wind_angle")?;
        check((0.0..=1.0).contains(&w.temperature_missing_prob), "temperature_missing_prob must lie in [0, 1]")?;
        check(
            [w.alt_config_per_day, w.outages_per_day].iter().all(|v| v.is_finite() && *v >= 0.0)
                && w.alt_config_mean_min >= 1.0
                && w.outage_mean_min >= 1.0,
            "weather regime rates must be non-negative and durations at least one minute",
        )?;
        let d = &self.delays;
        check(
            [d.deviation_mu, d.deviation_shift_min, d.taxi_out_mu, d.taxi_in_mu].iter().all(|v| v.is_finite())
                && [d.deviation_sigma, d.taxi_out_sigma, d.taxi_in_sigma].iter().all(|v| v.is_finite() && *v >= 0.0),
            "delay parameters must be finite with non-negative sigmas",
        )?;
        Ok(())
    }

    pub fn clock(&self) -> Clock {
        Clock::new(self.utc_offset_min)
    }

    pub fn start_minute(&self) -> i64 {
        self.start_time.div_euclid(60)
    }

    pub fn end_minute(&self) -> i64 {
        self.start_minute() + self.duration_days as i64 * MINUTES_PER_DAY
    }

    fn profile(&self, minute: i64) -> f64 {
        let tod = self.clock().minute_of_day(minute);
        match tod {
            0..360 | 1380.. => self.night_factor,
            420..540 | 1020..1140 => 1.25,
            _ => 1.0,
        }
    }

    fn ga_shape(&self, climb_samples: usize, level_samples: usize) -> GaShape {
        GaShape {
            descent_run: self.ga_descent_run,
            climb_samples,
            climb_ft_per_sample: 2000.0 / 60.0 * self.sample_period_s,
            level_samples,
            radar: RadarConfig::default(),
        }
    }
}

/// Geometry of an injected go-around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaShape {
    pub descent_run: usize,
    /// Strictly climbing samples after the go-around point.
    pub climb_samples: usize,
    pub climb_ft_per_sample: f64,
    pub level_samples: usize,
    pub radar: RadarConfig,
}

/// Replaces an approach from the first sample at or after `t` with a climb
/// along the last heading, a level segment and a strictly descending
/// re-approach to the original touchdown point. The climb starts at that
/// sample, which is the go-around time a detector should report.
pub fn inject_ga(track: &RadarTrack, t: f64, shape: &GaShape) -> Result<RadarTrack> {
    let pts = &track.points;
    let bad = |msg: &str| Error::InvalidArgument(format!("cannot inject go-around into {}: {msg}", track.flight_id));
    let j = pts.iter().position(|p| p.t >= t).ok_or_else(|| bad("time after the end of the track"))?;
    if j < shape.descent_run + 1 {
        return Err(bad("too close to the start of the track"));
    }
    if pts[j - 1 - shape.descent_run..j].windows(2).any(|w| w[1].alt >= w[0].alt) {
        return Err(bad("approach is not descending before the go-around time"));
    }
    let (a, b) = (pts[j - 2], pts[j - 1]);
    let period = b.t - a.t;
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let speed = dx.hypot(dy);
    let (ux, uy) = if speed > 0.0 { (dx / speed, dy / speed) } else { (1.0, 0.0) };
    let step = if speed > 0.0 { speed } else { 0.1 };
    let touchdown = *pts.last().expect("non-empty track");

    let mut out: Vec<TrackPoint> = pts[..j].to_vec();
    let mut cur = b;
    for k in 0..shape.climb_samples + shape.level_samples {
        let climb = if k < shape.climb_samples { shape.climb_ft_per_sample } else { 0.0 };
        cur = TrackPoint { t: cur.t + period, x: cur.x + ux * step, y: cur.y + uy * step, alt: cur.alt + climb };
        out.push(cur);
    }
    let dist = (touchdown.x - cur.x).hypot(touchdown.y - cur.y);
    let n_back = ((dist / step).ceil() as usize).max(shape.descent_run);
    let from = cur;
    for k in 1..=n_back {
        let f = k as f64 / n_back as f64;
        out.push(TrackPoint {
            t: from.t + period * k as f64,
            x: from.x + f * (touchdown.x - from.x),
            y: from.y + f * (touchdown.y - from.y),
            alt: from.alt * (1.0 - f),
        });
    }
    if out.iter().any(|p| !shape.radar.contains(p)) {
        return Err(bad("go-around path leaves radar coverage"));
    }
    Ok(RadarTrack { points: out, ..track.clone() })
}

/// Drivers and outcome of one SFO approach's hazard draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposure {
    pub flight_id: String,
    /// Candidate go-around time.
    pub t_target: f64,
    pub inbound: f64,
    pub visibility: f64,
    pub probability: f64,
    pub injected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectedGa {
    pub flight_id: String,
    /// Time of the first climbing sample.
    pub t_ga: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub events: Vec<InjectedGa>,
    pub hazard: HazardConfig,
    pub exposures: Vec<Exposure>,
    pub classes: BTreeMap<String, WeightClass>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub tracks: Vec<RadarTrack>,
    pub flights: Vec<FlightRecord>,
    pub weather: Vec<WeatherRecord>,
    pub truth: GroundTruth,
}

struct Movement {
    id: String,
    airport: Airport,
    arrival: bool,
    /// Approach entry for arrivals, wheels-off for departures.
    t: f64,
    class: WeightClass,
    ac_type: &'static str,
    other_end: &'static str,
}

/// Weather for every minute of the span, before outages are cut out.
fn generate_weather(cfg: &ScenarioConfig) -> (Vec<WeatherRecord>, Vec<bool>) {
    let w = &cfg.weather;
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "weather"));
    let (start, end) = (cfg.start_minute(), cfg.end_minute());
    let mut state = [w.visibility.mean, w.ceiling.mean, w.temperature.mean, w.wind_speed.mean, w.wind_angle.mean];
    let chans = [&w.visibility, &w.ceiling, &w.temperature, &w.wind_speed, &w.wind_angle];
    let per_min = |per_day: f64| per_day / MINUTES_PER_DAY as f64;
    let (mut alt, mut outage) = (false, false);
    let mut records = Vec::with_capacity((end - start) as usize);
    let mut present = Vec::with_capacity((end - start) as usize);
    for minute in start..end {
        for (s, c) in state.iter_mut().zip(chans) {
            *s = c.step(*s, &mut rng);
        }
        let u_alt: f64 = rng.random();
        alt = if alt { u_alt >= 1.0 / w.alt_config_mean_min } else { u_alt < per_min(w.alt_config_per_day) };
        let u_out: f64 = rng.random();
        outage = if outage { u_out >= 1.0 / w.outage_mean_min } else { u_out < per_min(w.outages_per_day) };
        let u_temp: f64 = rng.random();

        let visibility = state[0].clamp(w.visibility.min, w.visibility.max);
        let ceiling = state[1].clamp(w.ceiling.min, w.ceiling.max);
        records.push(WeatherRecord {
            minute,
            vmc: ceiling >= 1000.0 && visibility >= 3.0,
            ceiling,
            visibility,
            temperature: (u_temp >= w.temperature_missing_prob)
                .then(|| state[2].clamp(w.temperature.min, w.temperature.max)),
            wind_angle: state[4].rem_euclid(360.0),
            wind_speed: state[3].clamp(w.wind_speed.min, w.wind_speed.max),
            arr_runways: 2,
            dep_runways: 2,
            config_id: if alt { ALT_CONFIG } else { STUDY_CONFIG }.to_string(),
        });
        present.push(!outage);
    }
    (records, present)
}

fn generate_movements(cfg: &ScenarioConfig) -> Result<Vec<Movement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "traffic"));
    let mix = WeightedIndex::new(cfg.weight_mix).map_err(|e| Error::InvalidConfig(format!("weight_mix: {e}")))?;
    let mut out = Vec::new();
    for airport in Airport::ALL {
        let rates = cfg.traffic.get(airport);
        for (arrival, per_hour) in [(true, rates.arrivals_per_hour), (false, rates.departures_per_hour)] {
            if per_hour <= 0.0 {
                continue;
            }
            let mut seq = 0usize;
            for minute in cfg.start_minute()..cfg.end_minute() {
                let lambda = per_hour / 60.0 * cfg.profile(minute);
                if lambda <= 0.0 {
                    continue;
                }
                let n = Poisson::new(lambda).map_err(|e| Error::InvalidConfig(e.to_string()))?.sample(&mut rng) as usize;
                let mut times: Vec<f64> = (0..n).map(|_| minute as f64 * 60.0 + rng.random::<f64>() * 60.0).collect();
                times.sort_by(f64::total_cmp);
                for t in times {
                    let class = WeightClass::ALL[mix.sample(&mut rng)];
                    let types = types_of(class);
                    let ac_type = types[rng.random_range(0..types.len())];
                    let other_end = OTHER_ENDS[rng.random_range(0..OTHER_ENDS.len())];
                    seq += 1;
                    let id = format!("{}{}{:06}", airport.code(), if arrival { 'A' } else { 'D' }, seq);
                    out.push(Movement { id, airport, arrival, t, class, ac_type, other_end });
                }
            }
        }
    }
    Ok(out)
}

fn approach_track<R: Rng>(cfg: &ScenarioConfig, m: &Movement, rng: &mut R) -> RadarTrack {
    let g = geometry(m.airport);
    let d0 = rng.random_range(g.approach_nm.0..g.approach_nm.1) * cfg.approach_length_factor;
    let bearing = (g.approach_bearing + rng.random_range(-3.0..3.0f64)).to_radians();
    let step = cfg.approach_speed_kt / 3600.0 * cfg.sample_period_s;
    let n = (d0 / step).ceil() as usize;
    let points = (0..=n)
        .map(|k| {
            let d = (d0 - k as f64 * step).max(0.0);
            TrackPoint {
                t: m.t + k as f64 * cfg.sample_period_s,
                x: g.x + d * bearing.sin(),
                y: g.y + d * bearing.cos(),
                alt: d * GLIDE_FT_PER_NM,
            }
        })
        .collect();
    RadarTrack { flight_id: m.id.clone(), origin: m.other_end.into(), destination: m.airport.code().into(), points }
}

fn departure_track<R: Rng>(cfg: &ScenarioConfig, m: &Movement, rng: &mut R) -> RadarTrack {
    let g = geometry(m.airport);
    let bearing = (g.departure_bearing + rng.random_range(-3.0..3.0f64)).to_radians();
    let step = cfg.departure_speed_kt / 3600.0 * cfg.sample_period_s;
    let climb = DEPARTURE_CLIMB_FPM / 60.0 * cfg.sample_period_s;
    let n = (DEPARTURE_TRACK_NM / step).ceil() as usize;
    let points = (0..=n)
        .map(|k| {
            let d = k as f64 * step;
            TrackPoint {
                t: m.t + k as f64 * cfg.sample_period_s,
                x: g.x + d * bearing.sin(),
                y: g.y + d * bearing.cos(),
                alt: k as f64 * climb,
            }
        })
        .collect();
    RadarTrack { flight_id: m.id.clone(), origin: m.airport.code().into(), destination: m.other_end.into(), points }
}

/// Generates a full scenario. Deterministic in `cfg`.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let (all_weather, present) = generate_weather(cfg);
    let movements = generate_movements(cfg)?;
    let start = cfg.start_minute();

    let mut geo_rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "geometry"));
    let mut tracks: Vec<RadarTrack> = movements
        .iter()
        .map(|m| if m.arrival { approach_track(cfg, m, &mut geo_rng) } else { departure_track(cfg, m, &mut geo_rng) })
        .collect();

    // SFO inbound count per minute over the nominal tracks.
    let mut inbound: BTreeMap<i64, u32> = BTreeMap::new();
    for t in tracks.iter().filter(|t| t.destination == "SFO") {
        let (a, b) = (minute_of(t.points[0].t), minute_of(t.points.last().unwrap().t));
        for m in a..=b {
            *inbound.entry(m).or_default() += 1;
        }
    }

    let mut hz_rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "hazard"));
    let clock = cfg.clock();
    let mut truth = GroundTruth { hazard: cfg.hazard.clone(), ..GroundTruth::default() };
    for (m, track) in movements.iter().zip(tracks.iter_mut()) {
        truth.classes.insert(m.id.clone(), m.class);
        if !(m.arrival && m.airport == Airport::Sfo) {
            continue;
        }
        let step = cfg.approach_speed_kt / 3600.0 * cfg.sample_period_s;
        let dist: f64 = hz_rng.random_range(1.5..4.0);
        let touchdown = track.points.last().unwrap().t;
        let t_target = touchdown - dist / step * cfg.sample_period_s;
        let minute = minute_of(t_target);
        let n_in = inbound.get(&minute).copied().unwrap_or(0) as f64;
        let idx = (minute - start).clamp(0, all_weather.len().saturating_sub(1) as i64) as usize;
        let vis = all_weather.get(idx).map(|w| w.visibility).unwrap_or(10.0);
        let hour = (clock.minute_of_day(minute) / 60) as u32;
        let p = cfg.hazard.probability(n_in, vis, hour);
        let u: f64 = hz_rng.random();
        let climb_extra = hz_rng.random_range(5..=15usize);
        let level = hz_rng.random_range(3..=8usize);
        let injected = u < p;
        if injected {
            let shape = cfg.ga_shape(cfg.ga_climb_run + climb_extra, level);
            let modified = inject_ga(track, t_target, &shape)?;
            let j = track.points.iter().position(|p| p.t >= t_target).expect("target inside track");
            truth.events.push(InjectedGa { flight_id: m.id.clone(), t_ga: modified.points[j].t });
            *track = modified;
        }
        truth.exposures.push(Exposure {
            flight_id: m.id.clone(),
            t_target,
            inbound: n_in,
            visibility: vis,
            probability: p,
            injected,
        });
    }

    let mut delay_rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "delays"));
    let d = &cfg.delays;
    let ln = |mu: f64, sigma: f64| LogNormal::new(mu, sigma).map_err(|e| Error::InvalidConfig(e.to_string()));
    let deviation = ln(d.deviation_mu, d.deviation_sigma)?;
    let taxi_out = ln(d.taxi_out_mu, d.taxi_out_sigma)?;
    let taxi_in = ln(d.taxi_in_mu, d.taxi_in_sigma)?;
    let mut flights = Vec::with_capacity(movements.len());
    for (m, track) in movements.iter().zip(&tracks) {
        let dev = (deviation.sample(&mut delay_rng) - d.deviation_shift_min) * 60.0;
        let taxi = if m.arrival { taxi_in.sample(&mut delay_rng) } else { taxi_out.sample(&mut delay_rng) } * 60.0;
        let mut rec = FlightRecord {
            flight_id: m.id.clone(),
            airport: m.airport,
            sched_gate_out: None,
            act_gate_out: None,
            act_wheels_off: None,
            act_wheels_on: None,
            sched_wheels_on: None,
            act_gate_in: None,
            aircraft_type: Some(m.ac_type.to_string()),
        };
        if m.arrival {
            let on = track.points.last().unwrap().t;
            rec.act_wheels_on = Some(on);
            rec.sched_wheels_on = Some(on - dev);
            rec.act_gate_in = Some(on + taxi);
        } else {
            let off = track.points[0].t;
            let out = off - taxi;
            rec.act_wheels_off = Some(off);
            rec.act_gate_out = Some(out);
            rec.sched_gate_out = Some(out - dev);
        }
        flights.push(rec);
    }

    let mut pairs: Vec<(RadarTrack, FlightRecord)> = tracks.into_iter().zip(flights).collect();
    pairs.sort_by(|(a, _), (b, _)| a.points[0].t.total_cmp(&b.points[0].t).then_with(|| a.flight_id.cmp(&b.flight_id)));
    let (tracks, flights): (Vec<RadarTrack>, Vec<FlightRecord>) = pairs.into_iter().unzip();
    truth.events.sort_by(|a, b| a.t_ga.total_cmp(&b.t_ga).then_with(|| a.flight_id.cmp(&b.flight_id)));
    let weather = all_weather.into_iter().zip(present).filter_map(|(w, keep)| keep.then_some(w)).collect();
    Ok(Scenario { tracks, flights, weather, truth })
}

/// `flight_id,t_ga`
pub fn write_ground_truth<W: Write>(sink: W, truth: &GroundTruth) -> Result<()> {
    let err = |e: csv::Error| Error::Format { path: "ground_truth.csv".into(), msg: e.to_string() };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["flight_id", "t_ga"]).map_err(err)?;
    for e in &truth.events {
        w.write_record([e.flight_id.as_str(), &e.t_ga.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format { path: "ground_truth.csv".into(), msg: e.to_string() })
}
