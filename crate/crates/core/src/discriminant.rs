//! Two-class Gaussian discriminant with per-class covariances.
//!
//! For a standardized vector `x` the score is
//!
//! ```text
//! (x-μ0)ᵀ Σ0⁻¹ (x-μ0) + ln|Σ0| - (x-μ1)ᵀ Σ1⁻¹ (x-μ1) - ln|Σ1|
//! ```
//!
//! and `x` is labelled nominal when the score is below a threshold `T`.
//! Larger scores are more go-around-like.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::corpus::{Label, Sample};
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-4;

/// Per-feature affine transform `(x - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer { shift: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    /// Mean and unbiased standard deviation of the pooled rows; constant
    /// features get scale 1.
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).ok_or(Error::InvalidArgument("no rows".into()))?;
        let n = rows.len() as f64;
        let mut shift = vec![0.0; dim];
        let mut scale = vec![1.0; dim];
        for j in 0..dim {
            let first = rows[0][j];
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            shift[j] = mean;
            if rows.iter().all(|r| r[j] == first) || rows.len() < 2 {
                continue;
            }
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            if sd > 0.0 && sd.is_finite() {
                scale[j] = sd;
            }
        }
        Ok(Standardizer { shift, scale })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).zip(&self.scale).map(|((v, s), c)| (v - s) / c).collect()
    }
}

/// Gaussian parameters of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub mean: DVector<f64>,
    /// Regularized covariance.
    pub covariance: DMatrix<f64>,
    pub precision: DMatrix<f64>,
    pub log_det: f64,
}

impl ClassModel {
    /// Sample mean and unbiased covariance plus `ridge * trace / dim` on the
    /// diagonal.
    pub fn fit(rows: &[Vec<f64>], ridge: f64, class: u8) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewSamples { class, count: rows.len() });
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        let n = rows.len();
        let data = DMatrix::from_fn(n, dim, |i, j| rows[i][j]);
        let mean = DVector::from_fn(dim, |j, _| data.column(j).sum() / n as f64);
        let mut centered = data;
        for j in 0..dim {
            let mu = mean[j];
            centered.column_mut(j).apply(|v| *v -= mu);
        }
        let mut cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
        cov = (&cov + cov.transpose()) * 0.5;
        let trace = cov.trace();
        let unit = if trace > 0.0 { trace / dim as f64 } else { 1.0 };
        for j in 0..dim {
            cov[(j, j)] += ridge * unit;
        }
        Self::from_covariance(mean, cov, class, ridge)
    }

    /// Derives precision and log-determinant via a Cholesky factorization.
    pub fn from_covariance(mean: DVector<f64>, covariance: DMatrix<f64>, class: u8, ridge: f64) -> Result<Self> {
        let chol = covariance.clone().cholesky().ok_or(Error::NotPositiveDefinite { class, ridge })?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite { class, ridge });
        }
        let inv = chol.inverse();
        let precision = (&inv + inv.transpose()) * 0.5;
        Ok(ClassModel { mean, covariance, precision, log_det })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x - μ)ᵀ Σ⁻¹ (x - μ)`
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        diff.dot(&(&self.precision * &diff))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantModel {
    /// Nominal (y = 0).
    pub class0: ClassModel,
    /// Go-around (y = 1).
    pub class1: ClassModel,
    pub standardizer: Standardizer,
    pub ridge_lambda: f64,
}

impl DiscriminantModel {
    /// Fits on labelled samples, standardizing with pooled training moments.
    pub fn fit(train: &[Sample], ridge_lambda: f64) -> Result<Self> {
        let rows: Vec<&[f64]> = train.iter().map(|s| s.features.values.as_slice()).collect();
        let standardizer = Standardizer::fit(&rows)?;
        let labels: Vec<Label> = train.iter().map(|s| s.label).collect();
        Self::fit_rows(&rows, &labels, standardizer, ridge_lambda)
    }

    /// Fits on raw rows with a given standardizer.
    pub fn fit_rows(rows: &[&[f64]], labels: &[Label], standardizer: Standardizer, ridge_lambda: f64) -> Result<Self> {
        if !(ridge_lambda.is_finite() && ridge_lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("ridge_lambda must be >= 0, got {ridge_lambda}")));
        }
        let dim = standardizer.dim();
        let mut by_class: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for (row, label) in rows.iter().zip(labels) {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            by_class[label.as_u8() as usize].push(standardizer.apply(row));
        }
        let class0 = ClassModel::fit(&by_class[0], ridge_lambda, 0)?;
        let class1 = ClassModel::fit(&by_class[1], ridge_lambda, 1)?;
        Ok(DiscriminantModel { class0, class1, standardizer, ridge_lambda })
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let z = DVector::from_vec(self.standardizer.apply(x));
        Ok(self.class0.mahalanobis_sq(&z) + self.class0.log_det - self.class1.mahalanobis_sq(&z) - self.class1.log_det)
    }

    pub fn classify(&self, x: &[f64], threshold: Threshold) -> Result<Label> {
        Ok(if self.score(x)? < threshold.value() { Label::Nominal } else { Label::Ga })
    }

    /// Exchanges the two classes, which negates every score.
    pub fn swapped(&self) -> Self {
        DiscriminantModel {
            class0: self.class1.clone(),
            class1: self.class0.clone(),
            standardizer: self.standardizer.clone(),
            ridge_lambda: self.ridge_lambda,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{{");
        let _ = writeln!(s, "  \"ridge_lambda\": {},", num(self.ridge_lambda));
        let _ = writeln!(s, "  \"standardizer\": {{");
        let _ = writeln!(s, "    \"shift\": {},", list(&self.standardizer.shift));
        let _ = writeln!(s, "    \"scale\": {}", list(&self.standardizer.scale));
        let _ = writeln!(s, "  }},");
        for (name, class, last) in [("class0", &self.class0, false), ("class1", &self.class1, true)] {
            let _ = writeln!(s, "  \"{name}\": {{");
            let _ = writeln!(s, "    \"mean\": {},", list(class.mean.as_slice()));
            let _ = writeln!(s, "    \"cov\": [");
            let d = class.dim();
            for i in 0..d {
                let row: Vec<f64> = class.covariance.row(i).iter().copied().collect();
                let _ = writeln!(s, "      {}{}", list(&row), if i + 1 < d { "," } else { "" });
            }
            let _ = writeln!(s, "    ],");
            let _ = writeln!(s, "    \"log_det\": {}", num(class.log_det));
            let _ = writeln!(s, "  }}{}", if last { "" } else { "," });
        }
        let _ = writeln!(s, "}}");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Format { path: "model.json".into(), msg: e.to_string() })?;
        let dim = doc.standardizer.shift.len();
        if doc.standardizer.scale.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: doc.standardizer.scale.len() });
        }
        if doc.standardizer.scale.iter().any(|&c| c.is_nan() || c <= 0.0) {
            return Err(Error::Format { path: "model.json".into(), msg: "standardizer scales must be positive".into() });
        }
        let class = |c: ClassDoc, id: u8| -> Result<ClassModel> {
            if c.mean.len() != dim || c.cov.len() != dim || c.cov.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: c.mean.len() });
            }
            let cov = DMatrix::from_fn(dim, dim, |i, j| c.cov[i][j]);
            let model = ClassModel::from_covariance(DVector::from_vec(c.mean), cov, id, doc.ridge_lambda)?;
            if (model.log_det - c.log_det).abs() > 1e-9 * model.log_det.abs().max(1.0) {
                return Err(Error::Format {
                    path: "model.json".into(),
                    msg: format!("class{id} log_det {} disagrees with covariance ({})", c.log_det, model.log_det),
                });
            }
            Ok(model)
        };
        Ok(DiscriminantModel {
            class0: class(doc.class0, 0)?,
            class1: class(doc.class1, 1)?,
            standardizer: Standardizer { shift: doc.standardizer.shift, scale: doc.standardizer.scale },
            ridge_lambda: doc.ridge_lambda,
        })
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|&v| num(v)).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Deserialize)]
struct StandardizerDoc {
    shift: Vec<f64>,
    scale: Vec<f64>,
}

#[derive(Deserialize)]
struct ClassDoc {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    log_det: f64,
}

#[derive(Deserialize)]
struct ModelDoc {
    ridge_lambda: f64,
    standardizer: StandardizerDoc,
    class0: ClassDoc,
    class1: ClassDoc,
}

/// Decision threshold on the score.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    /// Stands in for +∞: nothing is alerted.
    pub const HIGH: Threshold = Threshold(f64::MAX);
    /// Stands in for −∞: everything is alerted.
    pub const LOW: Threshold = Threshold(-f64::MAX);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Threshold(value))
        } else {
            Err(Error::InvalidArgument(format!("threshold must be finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: Threshold,
    /// Share of all samples with score ≥ T.
    pub alert_fraction: f64,
    /// Share of go-around samples with score ≥ T.
    pub capture_fraction: f64,
}

/// Sweeps the threshold over every distinct score, plus the two sentinels.
/// Output is ordered by increasing alert fraction.
pub fn sweep_scores(scores: &[f64], labels: &[Label]) -> Result<Vec<SweepPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), got: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    let total = scores.len();
    let positives = labels.iter().filter(|&&l| l == Label::Ga).count();
    if positives == 0 || positives == total {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut out = Vec::with_capacity(total + 2);
    out.push(SweepPoint { threshold: Threshold::HIGH, alert_fraction: 0.0, capture_fraction: 0.0 });
    let (mut alerted, mut captured) = (0usize, 0usize);
    let mut i = 0;
    while i < total {
        let t = scores[order[i]];
        while i < total && scores[order[i]] == t {
            alerted += 1;
            if labels[order[i]] == Label::Ga {
                captured += 1;
            }
            i += 1;
        }
        out.push(SweepPoint {
            threshold: Threshold(t),
            alert_fraction: alerted as f64 / total as f64,
            capture_fraction: captured as f64 / positives as f64,
        });
    }
    out.push(SweepPoint { threshold: Threshold::LOW, alert_fraction: 1.0, capture_fraction: 1.0 });
    Ok(out)
}

pub fn score_samples(model: &DiscriminantModel, samples: &[Sample]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    samples.par_iter().map(|s| model.score(&s.features.values)).collect()
}

pub fn sweep(model: &DiscriminantModel, samples: &[Sample]) -> Result<Vec<SweepPoint>> {
    let scores = score_samples(model, samples)?;
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    sweep_scores(&scores, &labels)
}
