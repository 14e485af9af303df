//! Descriptive statistics and the grouped life-span tables.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("empty input")]
    Empty,
    #[error("NaN in input")]
    NaN,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bin width must be positive and finite, got {0}")]
    InvalidBinWidth(f64),
    #[error("unknown quantile method `{0}` (expected linear or nearest-rank)")]
    UnknownQuantileMethod(String),
}

fn reject_nan(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().any(|v| v.is_nan()) {
        Err(StatsError::NaN)
    } else {
        Ok(())
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::UndefinedCorrelation("length mismatch"));
    }
    if x.len() < 2 {
        return Err(StatsError::UndefinedCorrelation("fewer than two points"));
    }
    reject_nan(x)?;
    reject_nan(y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMethod {
    /// Interpolate between the order statistics around `(n - 1) * p`.
    #[default]
    Linear,
    /// Smallest value with at least `p * n` observations at or below it.
    NearestRank,
}

impl FromStr for QuantileMethod {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Self::Linear),
            "nearest-rank" | "nearest_rank" => Ok(Self::NearestRank),
            _ => Err(StatsError::UnknownQuantileMethod(s.to_string())),
        }
    }
}

fn quantile_sorted(sorted: &[f64], p: f64, method: QuantileMethod) -> f64 {
    let n = sorted.len();
    match method {
        QuantileMethod::Linear => {
            let h = (n - 1) as f64 * p;
            let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
        QuantileMethod::NearestRank => {
            let rank = (p * n as f64).ceil().max(1.0) as usize;
            sorted[rank.min(n) - 1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn quartiles(values: &[f64], method: QuantileMethod) -> Result<Quartiles, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    reject_nan(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Quartiles {
        q1: quantile_sorted(&sorted, 0.25, method),
        median: quantile_sorted(&sorted, 0.5, method),
        q3: quantile_sorted(&sorted, 0.75, method),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageStatsRow {
    pub language: String,
    pub average: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStatsRow {
    pub label: String,
    pub average: f64,
    pub count: u64,
}

/// Per-language life-span summary, shortest average first.
///
/// Projects without a language are skipped, as are languages with fewer
/// than `min_count` observations.
pub fn language_lifespan_table(
    pairs: &[(String, f64)],
    min_count: u64,
    method: QuantileMethod,
) -> Result<Vec<LanguageStatsRow>, StatsError> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (language, days) in pairs {
        if days.is_nan() {
            return Err(StatsError::NaN);
        }
        if !language.is_empty() {
            groups.entry(language.as_str()).or_default().push(*days);
        }
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (language, days) in groups {
        if (days.len() as u64) < min_count.max(1) {
            continue;
        }
        let q = quartiles(&days, method)?;
        rows.push(LanguageStatsRow {
            language: language.to_string(),
            average: mean(&days),
            q1: q.q1,
            median: q.median,
            q3: q.q3,
            count: days.len() as u64,
        });
    }
    rows.sort_by(|a, b| a.average.total_cmp(&b.average).then_with(|| a.language.cmp(&b.language)));
    Ok(rows)
}

/// Per-label average life-span, longest first. A project contributes to
/// every one of its labels.
pub fn label_lifespan_table(pairs: &[(BTreeSet<String>, f64)]) -> Result<Vec<LabelStatsRow>, StatsError> {
    let mut groups: BTreeMap<&str, (f64, u64)> = BTreeMap::new();
    for (labels, days) in pairs {
        if days.is_nan() {
            return Err(StatsError::NaN);
        }
        for label in labels {
            let acc = groups.entry(label.as_str()).or_default();
            acc.0 += days;
            acc.1 += 1;
        }
    }
    let mut rows: Vec<LabelStatsRow> = groups
        .into_iter()
        .map(|(label, (sum, count))| LabelStatsRow {
            label: label.to_string(),
            average: sum / count as f64,
            count,
        })
        .collect();
    rows.sort_by(|a, b| b.average.total_cmp(&a.average).then_with(|| a.label.cmp(&b.label)));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinnedPoint {
    pub center: f64,
    pub mean: f64,
    pub count: u64,
}

/// Mean of `y` within half-open bins `[k*w, (k+1)*w)` of `x`. Empty bins
/// are omitted.
pub fn binned_mean_series(x: &[f64], y: &[f64], bin_width: f64) -> Result<Vec<BinnedPoint>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(StatsError::InvalidBinWidth(bin_width));
    }
    reject_nan(x)?;
    reject_nan(y)?;
    let mut bins: BTreeMap<i64, (f64, u64)> = BTreeMap::new();
    for (a, b) in x.iter().zip(y) {
        let acc = bins.entry((a / bin_width).floor() as i64).or_default();
        acc.0 += b;
        acc.1 += 1;
    }
    Ok(bins
        .into_iter()
        .map(|(k, (sum, count))| BinnedPoint {
            center: (k as f64 + 0.5) * bin_width,
            mean: sum / count as f64,
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook sum-of-products form, kept apart from the centered
    /// two-pass evaluation used by `pearson`.
    fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn pearson_extremes() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn pearson_against_definition() {
        let x = [1.0, 2.0, 4.0, 5.0];
        let y = [2.0, 1.0, 5.0, 6.0];
        // centered sums: sxy = 12, sxx = 10, syy = 17
        let hand = 12.0 / (10.0f64 * 17.0).sqrt();
        assert!((pearson(&x, &y).unwrap() - hand).abs() < 1e-12);
        assert!((pearson_oracle(&x, &y) - hand).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(StatsError::UndefinedCorrelation(_))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(StatsError::UndefinedCorrelation(_))));
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(StatsError::UndefinedCorrelation(_))));
        assert_eq!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]), Err(StatsError::NaN));
    }

    #[test]
    fn quartile_examples() {
        let q = quartiles(&[5.0], QuantileMethod::Linear).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (5.0, 5.0, 5.0));
        // h = 0.75, 1.5, 2.25 over [1, 2, 3, 4]
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0], QuantileMethod::Linear).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.75, 2.5, 3.25));
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0], QuantileMethod::NearestRank).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.0, 2.0, 3.0));
        assert_eq!(quartiles(&[], QuantileMethod::Linear), Err(StatsError::Empty));
        assert_eq!(quartiles(&[f64::NAN], QuantileMethod::Linear), Err(StatsError::NaN));
    }

    #[test]
    fn language_table() {
        let pairs = vec![
            ("Perl".to_string(), 100.0),
            ("Java".to_string(), 10.0),
            ("Java".to_string(), 20.0),
            (String::new(), 5.0),
        ];
        let rows = language_lifespan_table(&pairs, 1, QuantileMethod::Linear).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].language.as_str(), rows[0].average, rows[0].count), ("Java", 15.0, 2));
        assert_eq!((rows[1].language.as_str(), rows[1].average), ("Perl", 100.0));
        assert!(language_lifespan_table(&[], 1, QuantileMethod::Linear).unwrap().is_empty());
        let filtered = language_lifespan_table(&pairs, 2, QuantileMethod::Linear).unwrap();
        assert_eq!(filtered.len(), 1);
    }

    #[test]
    fn label_table() {
        let pairs = vec![
            (BTreeSet::from(["editor".to_string()]), 577.0),
            (BTreeSet::from(["editor".to_string(), "Linux".to_string()]), 551.0),
            (BTreeSet::new(), 3.0),
        ];
        let rows = label_lifespan_table(&pairs).unwrap();
        assert_eq!(rows[0], LabelStatsRow { label: "editor".into(), average: 564.0, count: 2 });
        assert_eq!(rows[1], LabelStatsRow { label: "Linux".into(), average: 551.0, count: 1 });
        assert!(label_lifespan_table(&pairs[2..]).unwrap().is_empty());
    }

    #[test]
    fn binned_series() {
        let s = binned_mean_series(&[1.0, 2.0, 11.0], &[10.0, 20.0, 30.0], 10.0).unwrap();
        assert_eq!(
            s,
            vec![
                BinnedPoint { center: 5.0, mean: 15.0, count: 2 },
                BinnedPoint { center: 15.0, mean: 30.0, count: 1 }
            ]
        );
        let one = binned_mean_series(&[3.0], &[7.0], 2.0).unwrap();
        assert_eq!(one, vec![BinnedPoint { center: 3.0, mean: 7.0, count: 1 }]);
        assert!(binned_mean_series(&[1.0], &[1.0], 0.0).is_err());
        assert!(binned_mean_series(&[1.0], &[], 1.0).is_err());
    }

    fn paired(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2..max_len).prop_flat_map(|n| {
            (
                prop::collection::vec(-100.0f64..100.0, n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn pearson_symmetric_and_bounded((x, y) in paired(60)) {
            let (a, b) = (pearson(&x, &y).unwrap(), pearson(&y, &x).unwrap());
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!(a.abs() <= 1.0 + 1e-12);
            prop_assert!((a - pearson_oracle(&x, &y)).abs() <= 1e-9);
        }

        #[test]
        fn pearson_affine((x, y) in paired(60), scale in 0.01f64..100.0, shift in -1e3f64..1e3) {
            let r = pearson(&x, &y).unwrap();
            let up: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let down: Vec<f64> = x.iter().map(|v| -scale * v + shift).collect();
            prop_assert!((pearson(&up, &y).unwrap() - r).abs() <= 1e-9);
            prop_assert!((pearson(&down, &y).unwrap() + r).abs() <= 1e-9);
        }

        #[test]
        fn binned_means_recover_global_mean(x in prop::collection::vec(0.0f64..1000.0, 1..80), w in 1.0f64..200.0) {
            let y: Vec<f64> = x.iter().map(|v| v * 0.5 + 3.0).collect();
            let pts = binned_mean_series(&x, &y, w).unwrap();
            let n: u64 = pts.iter().map(|p| p.count).sum();
            let weighted: f64 = pts.iter().map(|p| p.mean * p.count as f64).sum::<f64>() / n as f64;
            prop_assert_eq!(n as usize, x.len());
            prop_assert!((weighted - mean(&y)).abs() <= 1e-9 * mean(&y).abs().max(1.0));
        }

        #[test]
        fn table_rows_within_group_range(pairs in prop::collection::vec((prop::sample::select(vec!["Java", "C", "Perl"]), 0.0f64..2000.0), 0..80)) {
            let owned: Vec<(String, f64)> = pairs.iter().map(|(l, d)| (l.to_string(), *d)).collect();
            let rows = language_lifespan_table(&owned, 1, QuantileMethod::Linear).unwrap();
            let total: u64 = rows.iter().map(|r| r.count).sum();
            prop_assert_eq!(total as usize, owned.len());
            for r in rows {
                let group: Vec<f64> = owned.iter().filter(|p| p.0 == r.language).map(|p| p.1).collect();
                let lo = group.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = group.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(r.average >= lo - 1e-9 && r.average <= hi + 1e-9);
                prop_assert!(r.q1 <= r.median && r.median <= r.q3);
            }
        }
    }
}
