//! File-level stages: synth → detect → featurize → label → train → eval.
//!
//! Every stage reads its inputs from disk and writes its outputs to disk, so
//! `run_all` is exactly the composition of the individual stages.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::airport::Airport;
use crate::corpus::{self, CorpusConfig, Label, Sample};
use crate::detect::{detect_ga, read_events, write_events, DetectorConfig, GaEvent};
use crate::discriminant::{score_samples, sweep_scores, DiscriminantModel, DEFAULT_RIDGE};
use crate::error::{Error, Result};
use crate::evaluate::{self, capture_at, lift_curve, DEFAULT_BINS};
use crate::features::{
    build_feature_table, build_timeline, read_features, write_features, FeatureOptions, FeatureVector, TableFilter,
    WeightClassMap, FEATURE_COUNT,
};
use crate::ingest::{self, RadarConfig, SynchronizedDataset};
use crate::seed::stage_seed;
use crate::synth::{self, ScenarioConfig};
use crate::time::MINUTES_PER_DAY;

/// Optional overrides of the default file locations under `out_dir`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Directory holding `tracks.csv`, `flights.csv` and `weather.csv`.
    pub dataset: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub radius_nm: f64,
    /// Extra `ac_type,class` rows for the weight-class table.
    pub weight_classes: Option<PathBuf>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { radius_nm: 45.0, weight_classes: None }
    }
}

/// Train/test periods as half-open ranges of local days, counted from the
/// local day of the first feature row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_days: Option<[i64; 2]>,
    pub test_days: Option<[i64; 2]>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_days: Some([0, 2]), test_days: Some([2, 3]) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub bins: usize,
    pub bin_minutes: i64,
    /// Operating point reported in `summary.csv`.
    pub alert_target: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { bins: DEFAULT_BINS, bin_minutes: 60, alert_target: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Airport whose arrivals are scanned for go-arounds; `None` scans all.
    pub dest: Option<String>,
    pub ridge_lambda: f64,
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub scenario: ScenarioConfig,
    pub detector: DetectorConfig,
    pub features: FeatureOptions,
    pub corpus: CorpusConfig,
    pub split: SplitConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            dest: Some("SFO".into()),
            ridge_lambda: DEFAULT_RIDGE,
            paths: Paths::default(),
            ingest: IngestConfig::default(),
            scenario: ScenarioConfig::default(),
            detector: DetectorConfig::default(),
            features: FeatureOptions::default(),
            corpus: CorpusConfig::default(),
            split: SplitConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.detector.validate()?;
        self.corpus.validate()?;
        if !(self.ingest.radius_nm.is_finite() && self.ingest.radius_nm > 0.0) {
            return Err(Error::InvalidConfig("ingest.radius_nm must be positive".into()));
        }
        if !(self.ridge_lambda.is_finite() && self.ridge_lambda >= 0.0) {
            return Err(Error::InvalidConfig("ridge_lambda must be non-negative".into()));
        }
        if let Some(d) = &self.dest {
            Airport::from_code(d).ok_or_else(|| Error::InvalidConfig(format!("unknown destination `{d}`")))?;
        }
        if self.eval.bins == 0 || !(0.0..=1.0).contains(&self.eval.alert_target) {
            return Err(Error::InvalidConfig("eval.bins must be positive and eval.alert_target in [0, 1]".into()));
        }
        Ok(())
    }

    /// Derives the per-stage seeds from the top-level seed.
    pub fn apply_seed(&mut self) {
        self.scenario.seed = stage_seed(self.seed, "synth");
        self.corpus.seed = stage_seed(self.seed, "label");
    }

    /// Propagates one UTC offset to every module.
    pub fn set_utc_offset(&mut self, minutes: i64) {
        self.features.utc_offset_min = minutes;
        self.scenario.utc_offset_min = minutes;
    }

    fn under(&self, over: &Option<PathBuf>, name: &str) -> PathBuf {
        over.clone().unwrap_or_else(|| self.out_dir.join(name))
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.paths.dataset.clone().unwrap_or_else(|| self.out_dir.clone())
    }
    pub fn events_path(&self) -> PathBuf {
        self.under(&self.paths.events, "ga_events.csv")
    }
    pub fn features_path(&self) -> PathBuf {
        self.under(&self.paths.features, "features.csv")
    }
    pub fn samples_path(&self) -> PathBuf {
        self.under(&self.paths.samples, "samples.csv")
    }
    pub fn train_path(&self) -> PathBuf {
        self.under(&self.paths.train, "train.csv")
    }
    pub fn test_path(&self) -> PathBuf {
        self.under(&self.paths.test, "test.csv")
    }
    pub fn model_path(&self) -> PathBuf {
        self.under(&self.paths.model, "model.json")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.under(&self.paths.report, "report")
    }

    pub fn radar(&self) -> RadarConfig {
        RadarConfig { radius_nm: self.ingest.radius_nm, ..RadarConfig::default() }
    }

    pub fn table_filter(&self) -> TableFilter {
        TableFilter {
            config_id: self.corpus.config_filter.clone(),
            day_window: Some((self.corpus.day_start, self.corpus.day_end)),
        }
    }

    pub fn weight_classes(&self) -> Result<WeightClassMap> {
        let mut map = WeightClassMap::default();
        if let Some(p) = &self.ingest.weight_classes {
            map.extend_from_csv(open(p)?)?;
        }
        Ok(map)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub tracks: usize,
    pub flights: usize,
    pub weather_minutes: usize,
    pub injected: usize,
}

/// Writes `tracks.csv`, `flights.csv`, `weather.csv` and `ground_truth.csv`.
pub fn run_synth(scenario: &ScenarioConfig, dir: &Path) -> Result<SynthSummary> {
    let s = synth::generate(scenario)?;
    write_file(&dir.join("tracks.csv"), |w| ingest::write_tracks(w, &s.tracks))?;
    write_file(&dir.join("flights.csv"), |w| ingest::write_flights(w, &s.flights))?;
    write_file(&dir.join("weather.csv"), |w| ingest::write_weather(w, &s.weather))?;
    write_file(&dir.join("ground_truth.csv"), |w| synth::write_ground_truth(w, &s.truth))?;
    Ok(SynthSummary {
        tracks: s.tracks.len(),
        flights: s.flights.len(),
        weather_minutes: s.weather.len(),
        injected: s.truth.events.len(),
    })
}

/// Runs the detector over every track bound for `dest` (all tracks when
/// `None`), keeping track order.
pub fn detect_all(tracks: &[ingest::RadarTrack], cfg: &DetectorConfig, dest: Option<Airport>) -> Vec<GaEvent> {
    tracks
        .par_iter()
        .filter(|t| dest.is_none() || t.destination_airport() == dest)
        .map(|t| detect_ga(t, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn run_detect(tracks: &Path, out: &Path, cfg: &RunConfig) -> Result<Vec<GaEvent>> {
    cfg.detector.validate()?;
    let parsed = ingest::parse_tracks(open(tracks)?, &cfg.radar())?;
    log::info!(
        "{} tracks kept; discarded {} non-monotone, {} out of range, {} foreign",
        parsed.tracks.len(),
        parsed.non_monotone,
        parsed.out_of_range,
        parsed.foreign
    );
    let dest = cfg.dest.as_deref().and_then(Airport::from_code);
    let events = detect_all(&parsed.tracks, &cfg.detector, dest);
    write_file(out, |w| write_events(w, &events))?;
    Ok(events)
}

/// Reads and synchronizes the three input sources in `dir`.
pub fn load_dataset(dir: &Path, radar: &RadarConfig) -> Result<SynchronizedDataset> {
    let tracks = ingest::parse_tracks(open(&dir.join("tracks.csv"))?, radar)?;
    let flights = ingest::parse_flights(open(&dir.join("flights.csv"))?)?;
    let weather = ingest::parse_weather(open(&dir.join("weather.csv"))?)?;
    let weather = ingest::interpolate_temperature(weather)?;
    ingest::synchronize(tracks.tracks, flights.records, weather)
}

pub fn featurize(ds: &SynchronizedDataset, cfg: &RunConfig) -> Result<Vec<FeatureVector>> {
    let timeline = build_timeline(ds, &cfg.weight_classes()?, &cfg.features);
    Ok(build_feature_table(&timeline, &cfg.table_filter()))
}

pub fn run_featurize(dataset: &Path, out: &Path, cfg: &RunConfig) -> Result<usize> {
    let ds = load_dataset(dataset, &cfg.radar())?;
    log::info!("synchronized span {} minutes, {} incomplete", ds.len(), ds.incomplete_count());
    let table = featurize(&ds, cfg)?;
    write_file(out, |w| write_features(w, &table))?;
    Ok(table.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub samples: Vec<Sample>,
    pub split: Option<(Vec<Sample>, Vec<Sample>)>,
}

/// Minute range `[start, end)` of local days `days` counted from the local
/// day containing `first_minute`.
pub fn day_range(first_minute: i64, days: [i64; 2], utc_offset_min: i64) -> Range<i64> {
    let day0 = (first_minute + utc_offset_min).div_euclid(MINUTES_PER_DAY);
    let at = |d: i64| (day0 + d) * MINUTES_PER_DAY - utc_offset_min;
    at(days[0])..at(days[1])
}

/// Go-around samples plus nominal samples, and the optional period split.
pub fn build_corpus(table: &[FeatureVector], events: &[GaEvent], cfg: &RunConfig) -> Result<Corpus> {
    cfg.corpus.validate()?;
    let clock = cfg.features.clock();
    let ga = corpus::label_ga_samples(table, events, &cfg.corpus, &clock);
    log::info!(
        "{} go-around samples; dropped {} at night, {} without features, {} merged",
        ga.samples.len(),
        ga.night,
        ga.unavailable,
        ga.merged
    );
    let nominal = corpus::sample_nominal(table, events, cfg.corpus.nominal_count, &cfg.corpus, &clock, cfg.corpus.seed)?;
    let mut samples = ga.samples;
    samples.extend(nominal);
    samples.sort_by_key(|s| (s.minute(), s.label));

    let split = match (cfg.split.train_days, cfg.split.test_days, table.first()) {
        (Some(train), Some(test), Some(first)) => {
            let off = cfg.features.utc_offset_min;
            let tr = day_range(first.minute, train, off);
            let te = day_range(first.minute, test, off);
            let seed = stage_seed(cfg.corpus.seed, "split");
            Some(corpus::split_by_period(&samples, tr, te, cfg.corpus.nominal_per_ga, seed)?)
        }
        _ => None,
    };
    Ok(Corpus { samples, split })
}

pub fn run_label(features: &Path, events: &Path, out: &Path, cfg: &RunConfig) -> Result<Corpus> {
    let table = read_features(open(features)?, &name(features))?;
    let events = read_events(open(events)?, &name(events))?;
    let corpus = build_corpus(&table, &events, cfg)?;
    write_file(out, |w| corpus::write_samples(w, &corpus.samples))?;
    if let Some((train, test)) = &corpus.split {
        write_file(&cfg.train_path(), |w| corpus::write_samples(w, train))?;
        write_file(&cfg.test_path(), |w| corpus::write_samples(w, test))?;
    }
    Ok(corpus)
}

pub fn run_train(samples: &Path, out: &Path, ridge_lambda: f64) -> Result<DiscriminantModel> {
    let train = corpus::read_samples(open(samples)?, &name(samples))?;
    let model = DiscriminantModel::fit(&train, ridge_lambda)?;
    write_file(out, |w| w.write_all(model.to_json().as_bytes()).map_err(|e| Error::io(out, e)))?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub samples: usize,
    pub ga: usize,
    pub alert_target: f64,
    pub threshold: f64,
    pub capture: f64,
    pub lift_ratio: f64,
    pub simple_ratio: f64,
}

/// Writes the lift curve, time-of-day histograms, feature ranking,
/// per-feature histograms and a summary into `dir`.
pub fn evaluate_model(model: &DiscriminantModel, test: &[Sample], dir: &Path, cfg: &RunConfig) -> Result<EvalSummary> {
    let scores = score_samples(model, test)?;
    let labels: Vec<Label> = test.iter().map(|s| s.label).collect();
    let curve = lift_curve(&sweep_scores(&scores, &labels)?);
    let target = cfg.eval.alert_target;
    let (threshold, capture) = capture_at(&curve, target)?;
    let predictions: Vec<Label> =
        scores.iter().map(|&s| if s >= threshold.value() { Label::Ga } else { Label::Nominal }).collect();
    let tod = evaluate::time_of_day_report(
        test,
        &predictions,
        cfg.eval.bin_minutes,
        (cfg.corpus.day_start, cfg.corpus.day_end),
        &cfg.features.clock(),
    )?;
    let ranked = evaluate::rank_features(test, cfg.eval.bins)?;

    write_file(&dir.join("lift_curve.csv"), |w| evaluate::write_lift_curve(w, &curve))?;
    write_file(&dir.join("time_of_day.csv"), |w| evaluate::write_time_of_day(w, &tod))?;
    write_file(&dir.join("feature_divergence.csv"), |w| evaluate::write_feature_divergence(w, &ranked))?;
    for idx in 1..=FEATURE_COUNT.min(model.dim()) {
        let h = evaluate::distribution_report(test, idx, cfg.eval.bins)?;
        write_file(&dir.join(format!("hist_{idx}.csv")), |w| evaluate::write_histogram(w, &h))?;
    }

    let summary = EvalSummary {
        samples: test.len(),
        ga: labels.iter().filter(|&&l| l == Label::Ga).count(),
        alert_target: target,
        threshold: threshold.value(),
        capture,
        lift_ratio: evaluate::lift_ratio(target, capture),
        simple_ratio: evaluate::simple_ratio(target, capture),
    };
    let rows: Vec<(&str, String)> = vec![
        ("samples", summary.samples.to_string()),
        ("ga_samples", summary.ga.to_string()),
        ("ridge_lambda", model.ridge_lambda.to_string()),
        ("standardized", "true".into()),
        ("alert_target", target.to_string()),
        ("threshold", summary.threshold.to_string()),
        ("capture_fraction", capture.to_string()),
        ("lift_ratio", summary.lift_ratio.to_string()),
        ("simple_ratio", summary.simple_ratio.to_string()),
    ];
    write_file(&dir.join("summary.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Format { path: "summary.csv".into(), msg: e.to_string() };
        c.write_record(["key", "value"]).map_err(err)?;
        for (k, v) in &rows {
            c.write_record([*k, v.as_str()]).map_err(err)?;
        }
        c.flush().map_err(|e| Error::io(dir.join("summary.csv"), e))
    })?;
    Ok(summary)
}

pub fn run_eval(model: &Path, samples: &Path, dir: &Path, cfg: &RunConfig) -> Result<EvalSummary> {
    let text = std::fs::read_to_string(model).map_err(|e| Error::io(model, e))?;
    let model = DiscriminantModel::from_json(&text)?;
    let test = corpus::read_samples(open(samples)?, &name(samples))?;
    evaluate_model(&model, &test, dir, cfg)
}

/// Every stage in order, through files under `cfg.out_dir`.
pub fn run_all(cfg: &RunConfig) -> Result<EvalSummary> {
    cfg.validate()?;
    if cfg.split.train_days.is_none() || cfg.split.test_days.is_none() {
        return Err(Error::InvalidConfig("run-all needs split.train_days and split.test_days".into()));
    }
    let dataset = cfg.dataset_dir();
    let s = run_synth(&cfg.scenario, &dataset)?;
    log::info!("synth: {} tracks, {} flights, {} go-arounds injected", s.tracks, s.flights, s.injected);
    let events = run_detect(&dataset.join("tracks.csv"), &cfg.events_path(), cfg)?;
    log::info!("detect: {} go-arounds", events.len());
    let rows = run_featurize(&dataset, &cfg.features_path(), cfg)?;
    log::info!("featurize: {rows} minutes");
    let corpus = run_label(&cfg.features_path(), &cfg.events_path(), &cfg.samples_path(), cfg)?;
    log::info!("label: {} samples", corpus.samples.len());
    run_train(&cfg.train_path(), &cfg.model_path(), cfg.ridge_lambda)?;
    run_eval(&cfg.model_path(), &cfg.test_path(), &cfg.report_dir(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_range_is_local() {
        // local midnight at -480 is 08:00 UTC
        let first = 8 * 60 + 7 * 60; // 07:00 local on day 0
        let r = day_range(first, [0, 1], -480);
        assert_eq!(r, 480..480 + 1440);
        assert_eq!(day_range(first, [1, 3], -480), 480 + 1440..480 + 3 * 1440);
    }

    #[test]
    fn config_from_partial_toml() {
        let cfg = RunConfig::from_toml("seed = 3\nridge_lambda = 0.01\n[scenario]\nduration_days = 2\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.scenario.duration_days, 2);
        assert_eq!(cfg.dest.as_deref(), Some("SFO"));
        assert!(cfg.validate().is_ok());
        assert!(RunConfig::from_toml("no_such_key = 1\n").is_err());
        assert!(RunConfig::from_toml("seed = \"x\"\n").is_err());
    }

    #[test]
    fn missing_input_names_path() {
        let err = run_train(Path::new("/nonexistent/train.csv"), Path::new("/tmp/m.json"), 1e-4).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/train.csv"));
    }
}
