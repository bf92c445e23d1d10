//! Labelled go-around / nominal samples, with the time-of-day window, the
//! exclusion band around go-arounds, and period-based train/test splits.

use std::io::{Read, Write};
use std::ops::Range;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detect::GaEvent;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_COUNT};
use crate::time::{minute_of, Clock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Nominal = 0,
    Ga = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Nominal),
            1 => Some(Label::Ga),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: Label,
}

impl Sample {
    pub fn minute(&self) -> i64 {
        self.features.minute
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    /// Local minute of day where the study window opens.
    pub day_start: i64,
    /// Local minute of day where it closes (exclusive).
    pub day_end: i64,
    /// Nominal minutes must be strictly farther than this from any go-around.
    pub nominal_gap_min: i64,
    /// Training nominal samples per training go-around.
    pub nominal_per_ga: f64,
    /// Nominal samples to draw; `None` keeps every eligible minute.
    pub nominal_count: Option<usize>,
    pub seed: u64,
    /// Runway configuration of the study.
    pub config_filter: Option<String>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            day_start: 7 * 60,
            day_end: 23 * 60,
            nominal_gap_min: 15,
            nominal_per_ga: 1.0,
            nominal_count: None,
            seed: 0,
            config_filter: Some(crate::synth::STUDY_CONFIG.to_string()),
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.day_start >= self.day_end {
            return Err(Error::InvalidConfig("day_start must precede day_end".into()));
        }
        if self.nominal_gap_min < 0 {
            return Err(Error::InvalidConfig("nominal_gap_min must be non-negative".into()));
        }
        if !(self.nominal_per_ga.is_finite() && self.nominal_per_ga >= 0.0) {
            return Err(Error::InvalidConfig("nominal_per_ga must be a non-negative number".into()));
        }
        Ok(())
    }

    pub fn in_day_window(&self, clock: &Clock, minute: i64) -> bool {
        let tod = clock.minute_of_day(minute);
        tod >= self.day_start && tod < self.day_end
    }
}

/// Outcome of labelling, with the reasons events were dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaLabelling {
    pub samples: Vec<Sample>,
    /// Events outside the daily study window.
    pub night: usize,
    /// Events whose minute has no feature row (incomplete data or another
    /// runway configuration).
    pub unavailable: usize,
    /// Events sharing a minute with an earlier event.
    pub merged: usize,
}

fn lookup(table: &[FeatureVector], minute: i64) -> Option<&FeatureVector> {
    table.binary_search_by_key(&minute, |r| r.minute).ok().map(|i| &table[i])
}

/// One go-around sample per event minute. `table` must be sorted by minute
/// and hold only minutes that passed completeness and configuration filters.
pub fn label_ga_samples(table: &[FeatureVector], events: &[GaEvent], cfg: &CorpusConfig, clock: &Clock) -> GaLabelling {
    let mut minutes: Vec<i64> = events.iter().map(|e| minute_of(e.t_ga)).collect();
    minutes.sort_unstable();
    let mut out = GaLabelling::default();
    let mut last = None;
    for m in minutes {
        if last == Some(m) {
            out.merged += 1;
            continue;
        }
        last = Some(m);
        if !cfg.in_day_window(clock, m) {
            out.night += 1;
            continue;
        }
        match lookup(table, m) {
            Some(fv) => out.samples.push(Sample { features: fv.clone(), label: Label::Ga }),
            None => out.unavailable += 1,
        }
    }
    out
}

fn ga_minutes(events: &[GaEvent]) -> Vec<i64> {
    let mut minutes: Vec<i64> = events.iter().map(|e| minute_of(e.t_ga)).collect();
    minutes.sort_unstable();
    minutes.dedup();
    minutes
}

/// Minutes of `table` that may serve as nominal samples.
pub fn eligible_nominal_minutes(table: &[FeatureVector], events: &[GaEvent], cfg: &CorpusConfig, clock: &Clock) -> Vec<i64> {
    let gas = ga_minutes(events);
    let gap = cfg.nominal_gap_min;
    table
        .iter()
        .map(|r| r.minute)
        .filter(|&m| cfg.in_day_window(clock, m))
        .filter(|&m| {
            // nearest go-around on either side
            let i = gas.partition_point(|&g| g < m);
            let after = gas.get(i).is_some_and(|&g| g - m <= gap);
            let before = i > 0 && m - gas[i - 1] <= gap;
            !(after || before)
        })
        .collect()
}

/// Draws nominal samples uniformly without replacement. `n = None` keeps all
/// eligible minutes.
pub fn sample_nominal(
    table: &[FeatureVector],
    events: &[GaEvent],
    n: Option<usize>,
    cfg: &CorpusConfig,
    clock: &Clock,
    seed: u64,
) -> Result<Vec<Sample>> {
    let eligible = eligible_nominal_minutes(table, events, cfg, clock);
    let chosen: Vec<i64> = match n {
        None => eligible,
        Some(n) if n > eligible.len() => {
            return Err(Error::NotEnoughEligible { requested: n, eligible: eligible.len() })
        }
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<usize> = index::sample(&mut rng, eligible.len(), n).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| eligible[i]).collect()
        }
    };
    Ok(chosen
        .into_iter()
        .map(|m| Sample { features: lookup(table, m).expect("eligible minute is in table").clone(), label: Label::Nominal })
        .collect())
}

/// Splits by minute ranges. Training keeps every go-around in its range and
/// `round(nominal_per_ga * n_ga)` nominal samples drawn with `seed`; the test
/// set keeps every sample in its range.
pub fn split_by_period(
    samples: &[Sample],
    train_range: Range<i64>,
    test_range: Range<i64>,
    nominal_per_ga: f64,
    seed: u64,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if train_range.start < test_range.end && test_range.start < train_range.end {
        return Err(Error::InvalidArgument("train and test ranges overlap".into()));
    }
    let in_train: Vec<&Sample> = samples.iter().filter(|s| train_range.contains(&s.minute())).collect();
    let train_ga: Vec<&Sample> = in_train.iter().copied().filter(|s| s.label == Label::Ga).collect();
    if train_ga.is_empty() {
        return Err(Error::EmptyTrainingGa);
    }
    let train_nominal: Vec<&Sample> = in_train.iter().copied().filter(|s| s.label == Label::Nominal).collect();
    let want = (nominal_per_ga * train_ga.len() as f64).round() as usize;
    if want > train_nominal.len() {
        return Err(Error::NotEnoughEligible { requested: want, eligible: train_nominal.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, train_nominal.len(), want).into_vec();
    picked.sort_unstable();

    let mut train: Vec<Sample> = train_ga.into_iter().cloned().collect();
    train.extend(picked.into_iter().map(|i| train_nominal[i].clone()));
    train.sort_by_key(|s| (s.minute(), s.label));
    let test: Vec<Sample> = samples.iter().filter(|s| test_range.contains(&s.minute())).cloned().collect();
    Ok((train, test))
}

/// Writes `minute,label,f1..f135`.
pub fn write_samples<W: Write>(sink: W, samples: &[Sample]) -> Result<()> {
    let err = |e: csv::Error| Error::Format { path: "samples.csv".into(), msg: e.to_string() };
    let mut w = csv::Writer::from_writer(sink);
    let header: Vec<String> = ["minute".to_string(), "label".to_string()]
        .into_iter()
        .chain((1..=FEATURE_COUNT).map(|i| format!("f{i}")))
        .collect();
    w.write_record(&header).map_err(err)?;
    let mut record = Vec::with_capacity(FEATURE_COUNT + 2);
    for s in samples {
        record.clear();
        record.push(s.minute().to_string());
        record.push(s.label.as_u8().to_string());
        record.extend(s.features.values.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format { path: "samples.csv".into(), msg: e.to_string() })
}

pub fn read_samples<R: Read>(source: R, file: &str) -> Result<Vec<Sample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers().map_err(|e| Error::Format { path: file.into(), msg: e.to_string() })?.clone();
    if headers.len() != FEATURE_COUNT + 2 || headers.get(0) != Some("minute") || headers.get(1) != Some("label") {
        return Err(Error::Format { path: file.into(), msg: format!("expected header minute,label,f1..f{FEATURE_COUNT}") });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |msg: String| Error::MalformedRow { file: file.into(), row: line, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let minute = rec.get(0).unwrap_or("").parse::<i64>().map_err(|e| bad(e.to_string()))?;
        let label = rec
            .get(1)
            .unwrap_or("")
            .parse::<u8>()
            .ok()
            .and_then(Label::from_u8)
            .ok_or_else(|| bad("label must be 0 or 1".into()))?;
        let values = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.push(Sample { features: FeatureVector { minute, values }, label });
    }
    Ok(out)
}
