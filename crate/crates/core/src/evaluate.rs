//! Lift curves, alert time-of-day histograms and per-feature distribution
//! comparisons between nominal and go-around samples.

use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{Label, Sample};
use crate::discriminant::{SweepPoint, Threshold};
use crate::error::{Error, Result};
use crate::features::{catalog, is_integer_valued, FEATURE_COUNT};
use crate::time::Clock;

pub const DEFAULT_BINS: usize = 50;
/// Integer-valued features with at most this range get unit-width bins.
pub const UNIT_BIN_MAX_RANGE: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftPoint {
    pub threshold: Threshold,
    pub alert_fraction: f64,
    pub capture_fraction: f64,
    /// Go-around rate while alerting over the rate while not alerting.
    pub lift_ratio: f64,
    /// `g / f`.
    pub simple_ratio: f64,
}

/// `(g/f) / ((1-g)/(1-f))`, infinite at `f = 0` or `g = 1`, and 1 at `f = 1`.
pub fn lift_ratio(f: f64, g: f64) -> f64 {
    if f >= 1.0 {
        1.0
    } else if f <= 0.0 || g >= 1.0 {
        f64::INFINITY
    } else {
        (g / f) / ((1.0 - g) / (1.0 - f))
    }
}

pub fn simple_ratio(f: f64, g: f64) -> f64 {
    if f <= 0.0 {
        f64::INFINITY
    } else {
        g / f
    }
}

pub fn lift_curve(sweep: &[SweepPoint]) -> Vec<LiftPoint> {
    sweep
        .iter()
        .map(|p| LiftPoint {
            threshold: p.threshold,
            alert_fraction: p.alert_fraction,
            capture_fraction: p.capture_fraction,
            lift_ratio: lift_ratio(p.alert_fraction, p.capture_fraction),
            simple_ratio: simple_ratio(p.alert_fraction, p.capture_fraction),
        })
        .collect()
}

/// Capture fraction at a target alert fraction, interpolated linearly between
/// the bracketing curve points. The threshold is the lower bracket's.
pub fn capture_at(curve: &[LiftPoint], target: f64) -> Result<(Threshold, f64)> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidArgument(format!("target alert fraction {target} outside [0, 1]")));
    }
    let Some(first) = curve.first() else {
        return Err(Error::InvalidArgument("empty lift curve".into()));
    };
    if target < first.alert_fraction {
        return Ok((first.threshold, first.capture_fraction));
    }
    let lo = curve.partition_point(|p| p.alert_fraction <= target) - 1;
    let a = &curve[lo];
    let g = match curve.get(lo + 1) {
        Some(b) if a.alert_fraction < target && b.alert_fraction > a.alert_fraction => {
            let w = (target - a.alert_fraction) / (b.alert_fraction - a.alert_fraction);
            a.capture_fraction + w * (b.capture_fraction - a.capture_fraction)
        }
        _ => a.capture_fraction,
    };
    Ok((a.threshold, g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeOfDayReport {
    /// Local minute of day at which each bin opens.
    pub bin_start: Vec<i64>,
    pub bin_minutes: i64,
    pub nominal: Vec<u64>,
    pub ga: Vec<u64>,
    pub alert: Vec<u64>,
}

/// Counts per local time-of-day bin over `[window.0, window.1)`. An empty
/// `predictions` slice yields an all-zero alert histogram.
pub fn time_of_day_report(
    samples: &[Sample],
    predictions: &[Label],
    bin_minutes: i64,
    window: (i64, i64),
    clock: &Clock,
) -> Result<TimeOfDayReport> {
    let (lo, hi) = window;
    if bin_minutes <= 0 || hi <= lo || (hi - lo) % bin_minutes != 0 {
        return Err(Error::InvalidArgument(format!(
            "bin width {bin_minutes} min does not divide the window {lo}..{hi}"
        )));
    }
    if !predictions.is_empty() && predictions.len() != samples.len() {
        return Err(Error::DimensionMismatch { expected: samples.len(), got: predictions.len() });
    }
    let n = ((hi - lo) / bin_minutes) as usize;
    let mut report = TimeOfDayReport {
        bin_start: (0..n as i64).map(|i| lo + i * bin_minutes).collect(),
        bin_minutes,
        nominal: vec![0; n],
        ga: vec![0; n],
        alert: vec![0; n],
    };
    for (i, s) in samples.iter().enumerate() {
        let tod = clock.minute_of_day(s.minute());
        if tod < lo || tod >= hi {
            continue;
        }
        let b = ((tod - lo) / bin_minutes) as usize;
        match s.label {
            Label::Nominal => report.nominal[b] += 1,
            Label::Ga => report.ga[b] += 1,
        }
        if predictions.get(i) == Some(&Label::Ga) {
            report.alert[b] += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPair {
    pub feature_index: usize,
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub nominal: Vec<f64>,
    pub ga: Vec<f64>,
    /// Total-variation distance between the two histograms.
    pub divergence: f64,
}

fn densities(values: &[f64], edges: &[f64]) -> Vec<f64> {
    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    let lo = edges[0];
    let width = (edges[bins] - lo) / bins as f64;
    for &v in values {
        let b = if width > 0.0 { ((v - lo) / width).floor() as i64 } else { 0 };
        counts[b.clamp(0, bins as i64 - 1) as usize] += 1;
    }
    let n = values.len() as f64;
    counts.into_iter().map(|c| if n > 0.0 { c as f64 / n } else { 0.0 }).collect()
}

/// `(edges, nominal density, go-around density, total variation)`.
pub type Histograms = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

/// Normalized histograms of two value sets over shared edges spanning their
/// pooled range. With `integer_bins`, a range of at most 60 gets unit bins
/// centred on the integers.
pub fn histogram_pair(nominal: &[f64], ga: &[f64], bins: usize, integer_bins: bool) -> Result<Histograms> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let pooled = nominal.iter().chain(ga);
    let (min, max) = pooled.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::NonFinite);
    }
    let edges: Vec<f64> = if max == min {
        vec![min, max]
    } else if integer_bins && max - min <= UNIT_BIN_MAX_RANGE {
        let n = (max - min) as usize + 1;
        (0..=n).map(|i| min - 0.5 + i as f64).collect()
    } else {
        let w = (max - min) / bins as f64;
        (0..=bins).map(|i| if i == bins { max } else { min + w * i as f64 }).collect()
    };
    let p = densities(nominal, &edges);
    let q = densities(ga, &edges);
    let tv = if edges.len() == 2 { 0.0 } else { 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>() };
    Ok((edges, p, q, tv.clamp(0.0, 1.0)))
}

/// Nominal vs go-around histograms of one feature (1-based index).
pub fn distribution_report(samples: &[Sample], feature_index: usize, bins: usize) -> Result<HistogramPair> {
    if feature_index == 0 || samples.iter().any(|s| s.features.values.len() < feature_index) {
        return Err(Error::InvalidArgument(format!("feature index {feature_index} out of range")));
    }
    let (mut nominal, mut ga) = (Vec::new(), Vec::new());
    for s in samples {
        let v = s.features.get(feature_index);
        match s.label {
            Label::Nominal => nominal.push(v),
            Label::Ga => ga.push(v),
        }
    }
    if nominal.is_empty() || ga.is_empty() {
        return Err(Error::SingleClass);
    }
    let integer = catalog().get(feature_index - 1).is_some_and(is_integer_valued)
        && nominal.iter().chain(&ga).all(|v| v.fract() == 0.0);
    let (edges, p, q, divergence) = histogram_pair(&nominal, &ga, bins, integer)?;
    Ok(HistogramPair { feature_index, edges, nominal: p, ga: q, divergence })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDivergence {
    pub index: usize,
    pub name: String,
    pub divergence: f64,
}

/// Every catalog feature ordered by divergence, largest first (stable).
pub fn rank_features(samples: &[Sample], bins: usize) -> Result<Vec<FeatureDivergence>> {
    let dim = samples.first().map(|s| s.features.values.len()).unwrap_or(FEATURE_COUNT);
    let mut ranked = (1..=dim)
        .into_par_iter()
        .map(|i| {
            let h = distribution_report(samples, i, bins)?;
            let name = catalog().get(i - 1).map(|s| s.name.clone()).unwrap_or_else(|| format!("f{i}"));
            Ok(FeatureDivergence { index: i, name, divergence: h.divergence })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.divergence.total_cmp(&a.divergence));
    Ok(ranked)
}

fn csv_err(file: &str) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format { path: file.into(), msg: e.to_string() }
}

fn finish<W: Write>(w: csv::Writer<W>, file: &str) -> Result<()> {
    w.into_inner().map_err(|e| Error::Format { path: file.into(), msg: e.to_string() })?;
    Ok(())
}

/// `T,alert_fraction,capture_fraction,lift_ratio`
pub fn write_lift_curve<W: Write>(sink: W, curve: &[LiftPoint]) -> Result<()> {
    let err = csv_err("lift_curve.csv");
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["T", "alert_fraction", "capture_fraction", "lift_ratio"]).map_err(&err)?;
    for p in curve {
        w.write_record([
            p.threshold.value().to_string(),
            p.alert_fraction.to_string(),
            p.capture_fraction.to_string(),
            p.lift_ratio.to_string(),
        ])
        .map_err(&err)?;
    }
    finish(w, "lift_curve.csv")
}

/// `bin_start,bin_end,nominal,ga,alert` with bins as local `HH:MM`.
pub fn write_time_of_day<W: Write>(sink: W, report: &TimeOfDayReport) -> Result<()> {
    let err = csv_err("time_of_day.csv");
    let hhmm = |m: i64| format!("{:02}:{:02}", m / 60, m % 60);
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["bin_start", "bin_end", "nominal", "ga", "alert"]).map_err(&err)?;
    for (i, &start) in report.bin_start.iter().enumerate() {
        w.write_record([
            hhmm(start),
            hhmm(start + report.bin_minutes),
            report.nominal[i].to_string(),
            report.ga[i].to_string(),
            report.alert[i].to_string(),
        ])
        .map_err(&err)?;
    }
    finish(w, "time_of_day.csv")
}

/// `rank,index,name,divergence`
pub fn write_feature_divergence<W: Write>(sink: W, ranked: &[FeatureDivergence]) -> Result<()> {
    let err = csv_err("feature_divergence.csv");
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["rank", "index", "name", "divergence"]).map_err(&err)?;
    for (r, f) in ranked.iter().enumerate() {
        w.write_record([(r + 1).to_string(), f.index.to_string(), f.name.clone(), f.divergence.to_string()])
            .map_err(&err)?;
    }
    finish(w, "feature_divergence.csv")
}

/// `bin_lo,bin_hi,nominal,ga`
pub fn write_histogram<W: Write>(sink: W, h: &HistogramPair) -> Result<()> {
    let err = csv_err("hist.csv");
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["bin_lo", "bin_hi", "nominal", "ga"]).map_err(&err)?;
    for i in 0..h.nominal.len() {
        w.write_record([h.edges[i].to_string(), h.edges[i + 1].to_string(), h.nominal[i].to_string(), h.ga[i].to_string()])
            .map_err(&err)?;
    }
    finish(w, "hist.csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminant::sweep_scores;
    use crate::features::FeatureVector;

    fn sample(minute: i64, label: Label, v: f64) -> Sample {
        Sample { features: FeatureVector { minute, values: vec![v; FEATURE_COUNT] }, label }
    }

    #[test]
    fn lift_examples() {
        assert_eq!(lift_ratio(0.3, 0.3), 1.0);
        assert_eq!(lift_ratio(0.5, 1.0), f64::INFINITY);
        assert_eq!(lift_ratio(0.0, 0.0), f64::INFINITY);
        assert_eq!(lift_ratio(1.0, 1.0), 1.0);
        assert!((lift_ratio(0.15, 0.39) - 3.623).abs() < 1e-3);
        assert!((simple_ratio(0.15, 0.39) - 2.6).abs() < 1e-12);
    }

    #[test]
    fn capture_endpoints_and_interpolation() {
        let scores = [-2.0, -1.0, 1.0, 2.0];
        let labels = [Label::Nominal, Label::Nominal, Label::Ga, Label::Ga];
        let curve = lift_curve(&sweep_scores(&scores, &labels).unwrap());
        assert_eq!(capture_at(&curve, 0.0).unwrap().1, 0.0);
        assert_eq!(capture_at(&curve, 1.0).unwrap().1, 1.0);
        // between (0.25, 0.5) and (0.5, 1.0)
        let (t, g) = capture_at(&curve, 0.375).unwrap();
        assert_eq!(t.value(), 2.0);
        assert!((g - 0.75).abs() < 1e-12);
        assert!(capture_at(&curve, 1.5).is_err());
        assert!(capture_at(&curve, -0.1).is_err());
    }

    #[test]
    fn time_of_day_bins() {
        let clock = Clock::new(0);
        let samples: Vec<Sample> = [9 * 60, 9 * 60 + 30, 12 * 60]
            .into_iter()
            .map(|m| sample(m, Label::Nominal, 0.0))
            .chain([sample(9 * 60 + 59, Label::Ga, 0.0)])
            .collect();
        let preds = [Label::Ga, Label::Ga, Label::Nominal, Label::Ga];
        let r = time_of_day_report(&samples, &preds, 60, (420, 1380), &clock).unwrap();
        assert_eq!(r.bin_start.len(), 16);
        assert_eq!(r.alert[2], 3);
        assert_eq!(r.alert.iter().sum::<u64>(), 3);
        assert_eq!(r.nominal[2], 2);
        assert_eq!(r.nominal[5], 1);
        assert_eq!(r.ga[2], 1);
        let empty = time_of_day_report(&samples, &[], 60, (420, 1380), &clock).unwrap();
        assert!(empty.alert.iter().all(|&c| c == 0));
        assert!(time_of_day_report(&samples, &[], 70, (420, 1380), &clock).is_err());
    }

    #[test]
    fn divergence_extremes() {
        let same: Vec<Sample> = (0..20)
            .map(|i| sample(i, if i % 2 == 0 { Label::Nominal } else { Label::Ga }, (i / 2) as f64 * 0.37))
            .collect();
        let h = distribution_report(&same, 128, 10).unwrap();
        assert!(h.divergence.abs() < 1e-12);
        assert!((h.nominal.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let disjoint: Vec<Sample> = (0..20)
            .map(|i| if i < 10 { sample(i, Label::Nominal, i as f64 * 0.1) } else { sample(i, Label::Ga, 5.0 + i as f64) })
            .collect();
        assert!((distribution_report(&disjoint, 128, 50).unwrap().divergence - 1.0).abs() < 1e-12);

        let flat: Vec<Sample> = (0..4).map(|i| sample(i, if i < 2 { Label::Nominal } else { Label::Ga }, 3.0)).collect();
        let h = distribution_report(&flat, 10, 50).unwrap();
        assert_eq!(h.edges.len(), 2);
        assert_eq!(h.divergence, 0.0);
    }

    #[test]
    fn integer_features_use_unit_bins() {
        // index 2 is an inbound count
        let s: Vec<Sample> = (0..10).map(|i| sample(i, if i < 5 { Label::Nominal } else { Label::Ga }, i as f64)).collect();
        let h = distribution_report(&s, 2, 50).unwrap();
        assert_eq!(h.edges.first(), Some(&-0.5));
        assert_eq!(h.edges.len(), 11);
        assert!((h.divergence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let s: Vec<Sample> = (0..3).map(|i| sample(i, Label::Ga, i as f64)).collect();
        assert!(matches!(distribution_report(&s, 3, 10), Err(Error::SingleClass)));
    }

    #[test]
    fn lift_csv_has_four_columns() {
        let curve = lift_curve(&sweep_scores(&[0.0, 1.0], &[Label::Nominal, Label::Ga]).unwrap());
        let mut buf = Vec::new();
        write_lift_curve(&mut buf, &curve).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("T,alert_fraction,capture_fraction,lift_ratio\n"));
        assert!(text.lines().all(|l| l.split(',').count() == 4));
    }
}
