//! Life-span prediction model: parameter derivation, prediction and
//! relative-error evaluation.
//!
//! ```text
//! LP = alpha * log2(n) * l(language) * log2(m) + beta * lab(labels)
//! ```
//!
//! Both logarithm arguments are clamped to at least 2, so each log factor
//! is at least 1. `lab` is the mean offset over the project's known labels
//! and the result is floored at 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{FeatureVector, LifespanRecord, BASELINE_LANGUAGE};
use crate::reference;
use crate::stats::{LabelStatsRow, LanguageStatsRow};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("baseline language `{0}` missing from the language table")]
    MissingBaseline(String),
    #[error("baseline language `{0}` has non-positive average life-span")]
    NonPositiveBaseline(String),
    #[error("global mean life-span must be positive, got {0}")]
    NonPositiveGlobalMean(f64),
    #[error("no records to calibrate alpha from")]
    EmptyCalibration,
    #[error("project {0} has no files; alpha is undefined")]
    ZeroFileCount(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("no projects satisfy ratio filter")]
    NoProjectsPassFilter,
    #[error("project {0} has zero actual life-span; relative error undefined")]
    ZeroActualLifespan(String),
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Days per (log2 file x log2 follower) unit.
    pub alpha: f64,
    /// Weight of the label offset.
    pub beta: f64,
    pub baseline: String,
    pub language_factors: BTreeMap<String, f64>,
    /// Label average minus global mean, in days.
    pub label_offsets: BTreeMap<String, f64>,
    pub global_mean_lifespan: f64,
}

impl ModelParams {
    /// Parameters derived from the published corpus tables.
    pub fn reference() -> Self {
        let language_factors = derive_language_factors(&reference::language_rows(), BASELINE_LANGUAGE)
            .expect("reference table contains the baseline");
        let label_offsets = derive_label_offsets(&reference::label_rows(), reference::GLOBAL_MEAN_LIFESPAN)
            .expect("reference global mean is positive");
        Self {
            alpha: reference::ALPHA,
            beta: reference::BETA,
            baseline: BASELINE_LANGUAGE.to_string(),
            language_factors,
            label_offsets,
            global_mean_lifespan: reference::GLOBAL_MEAN_LIFESPAN,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |msg: String| Err(ModelError::InvalidParams(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return invalid(format!("alpha must be positive, got {}", self.alpha));
        }
        if !self.beta.is_finite() {
            return invalid(format!("beta must be finite, got {}", self.beta));
        }
        if !(self.global_mean_lifespan > 0.0 && self.global_mean_lifespan.is_finite()) {
            return invalid(format!(
                "global_mean_lifespan must be positive, got {}",
                self.global_mean_lifespan
            ));
        }
        match self.language_factors.get(&self.baseline) {
            Some(1.0) => {}
            Some(&f) => return invalid(format!("baseline `{}` has factor {f}, expected 1.0", self.baseline)),
            None => return invalid(format!("baseline `{}` missing from language_factors", self.baseline)),
        }
        if let Some((lang, f)) = self
            .language_factors
            .iter()
            .find(|(_, f)| !(**f > 0.0 && f.is_finite()))
        {
            return invalid(format!("language factor for `{lang}` must be positive, got {f}"));
        }
        if let Some((label, _)) = self.label_offsets.iter().find(|(_, o)| !o.is_finite()) {
            return invalid(format!("label offset for `{label}` is not finite"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let params: Self = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Factor of each language: its average life-span over the baseline's.
pub fn derive_language_factors(
    table: &[LanguageStatsRow],
    baseline: &str,
) -> Result<BTreeMap<String, f64>, ModelError> {
    let base = table
        .iter()
        .find(|r| r.language == baseline)
        .ok_or_else(|| ModelError::MissingBaseline(baseline.to_string()))?;
    if base.average.is_nan() || base.average <= 0.0 {
        return Err(ModelError::NonPositiveBaseline(baseline.to_string()));
    }
    Ok(table
        .iter()
        .map(|r| {
            let factor = if r.language == baseline {
                1.0
            } else {
                r.average / base.average
            };
            (r.language.clone(), factor)
        })
        .collect())
}

pub fn derive_label_offsets(
    table: &[LabelStatsRow],
    global_mean: f64,
) -> Result<BTreeMap<String, f64>, ModelError> {
    if global_mean.is_nan() || global_mean <= 0.0 {
        return Err(ModelError::NonPositiveGlobalMean(global_mean));
    }
    Ok(table
        .iter()
        .map(|r| (r.label.clone(), r.average - global_mean))
        .collect())
}

/// Mean number of life-span days per file.
pub fn calibrate_alpha(records: &[(FeatureVector, f64)]) -> Result<f64, ModelError> {
    if records.is_empty() {
        return Err(ModelError::EmptyCalibration);
    }
    let mut sum = 0.0;
    for (f, days) in records {
        if f.n == 0 {
            return Err(ModelError::ZeroFileCount(f.project_id.clone()));
        }
        sum += days / f.n as f64;
    }
    Ok(sum / records.len() as f64)
}

/// A prediction together with the terms it was assembled from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub lp: f64,
    pub log2_n: f64,
    pub log2_m: f64,
    pub language_factor: f64,
    /// Mean offset over the known labels (0 when none is known).
    pub label_offset: f64,
    /// `alpha * log2_n * language_factor * log2_m`.
    pub size_term: f64,
    /// `beta * label_offset`.
    pub label_term: f64,
    pub unknown_language: bool,
    pub unknown_labels: Vec<String>,
}

fn clamped_log2(v: f64) -> f64 {
    v.max(2.0).log2()
}

pub fn predict_lifespan(f: &FeatureVector, p: &ModelParams) -> Prediction {
    let log2_n = clamped_log2(f.n as f64);
    let log2_m = clamped_log2(f.m);
    let (language_factor, unknown_language) = if f.language.is_empty() {
        (1.0, false)
    } else {
        match p.language_factors.get(&f.language) {
            Some(&factor) => (factor, false),
            None => (1.0, true),
        }
    };

    let mut unknown_labels = Vec::new();
    let mut known = Vec::with_capacity(f.labels.len());
    for label in &f.labels {
        match p.label_offsets.get(label) {
            Some(&o) => known.push(o),
            None => unknown_labels.push(label.clone()),
        }
    }
    let label_offset = if known.is_empty() {
        0.0
    } else {
        known.iter().sum::<f64>() / known.len() as f64
    };

    let size_term = p.alpha * log2_n * language_factor * log2_m;
    let label_term = p.beta * label_offset;
    Prediction {
        lp: (size_term + label_term).max(0.0),
        log2_n,
        log2_m,
        language_factor,
        label_offset,
        size_term,
        label_term,
        unknown_language,
        unknown_labels,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRow {
    pub project_id: String,
    pub predicted: f64,
    pub actual: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub threshold: f64,
    /// Fraction of evaluated projects whose relative error is at most `threshold`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub rows: Vec<EvaluationRow>,
    pub cdf_points: Vec<CdfPoint>,
    /// Projects dropped by the non-working ratio filter.
    pub excluded: usize,
    #[serde(skip)]
    sorted_errors: Vec<f64>,
}

impl EvaluationReport {
    pub fn fraction_within(&self, threshold: f64) -> f64 {
        let within = self.sorted_errors.partition_point(|&e| e <= threshold);
        within as f64 / self.sorted_errors.len() as f64
    }
}

pub const DEFAULT_MAX_RATIO: f64 = 0.3;

/// `0.1, 0.2, ..., 1.0`.
pub fn default_thresholds() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) / 10.0).collect()
}

/// Relative error of every project whose non-working ratio is below
/// `max_ratio`, plus the cumulative share at each threshold.
pub fn evaluate(
    dataset: &[(FeatureVector, LifespanRecord)],
    params: &ModelParams,
    max_ratio: f64,
    thresholds: &[f64],
) -> Result<EvaluationReport, ModelError> {
    let mut thresholds = thresholds.to_vec();
    if let Some(&bad) = thresholds.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(ModelError::InvalidThreshold(bad));
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut rows = Vec::new();
    let mut excluded = 0;
    for (features, life) in dataset {
        if life.non_working_ratio.is_nan() || life.non_working_ratio >= max_ratio {
            excluded += 1;
            continue;
        }
        if life.days == 0 {
            return Err(ModelError::ZeroActualLifespan(life.project_id.clone()));
        }
        let predicted = predict_lifespan(features, params).lp;
        let actual = life.days as f64;
        rows.push(EvaluationRow {
            project_id: life.project_id.clone(),
            predicted,
            actual,
            relative_error: (predicted - actual).abs() / actual,
        });
    }
    if rows.is_empty() {
        return Err(ModelError::NoProjectsPassFilter);
    }

    let mut sorted_errors: Vec<f64> = rows.iter().map(|r| r.relative_error).collect();
    sorted_errors.sort_by(f64::total_cmp);
    let mut report = EvaluationReport {
        rows,
        cdf_points: Vec::new(),
        excluded,
        sorted_errors,
    };
    report.cdf_points = thresholds
        .iter()
        .map(|&threshold| CdfPoint {
            threshold,
            fraction: report.fraction_within(threshold),
        })
        .collect();
    Ok(report)
}
