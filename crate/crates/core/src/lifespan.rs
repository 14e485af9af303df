//! Life-span arithmetic: birth-to-death length, histogram binning, and the
//! non-working ratio derived from gaps between commit days.

use chrono::NaiveDate;
use thiserror::Error;

use crate::domain::{CommitTimeline, LifespanRecord, ProjectRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LifespanError {
    #[error("lifespan shorter than commit span ({lifespan} < {span} days)")]
    LifespanShorterThanCommitSpan { lifespan: u64, span: u64 },
    #[error("histogram edges must be strictly increasing and >= 1, got {0:?}")]
    InvalidHistogramEdges(Vec<u64>),
}

/// How commit gaps turn into non-working days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapRule {
    /// Gaps of this many days or fewer are ordinary working rhythm.
    pub threshold_days: u32,
    /// Count `gap - 1` instead of `gap`, leaving out the closing commit day.
    pub exclusive: bool,
}

impl Default for GapRule {
    fn default() -> Self {
        Self {
            threshold_days: 6,
            exclusive: false,
        }
    }
}

fn day_diff(later: NaiveDate, earlier: NaiveDate) -> i64 {
    (later - earlier).num_days()
}

/// Sums the qualifying gaps between consecutive commit dates and divides by
/// `lifespan_days`. Fewer than two dates yield `(0, 0.0)`.
pub fn non_working_ratio(
    dates: &[NaiveDate],
    lifespan_days: u64,
    rule: GapRule,
) -> Result<(u64, f64), LifespanError> {
    if dates.len() < 2 {
        return Ok((0, 0.0));
    }
    let span = day_diff(dates[dates.len() - 1], dates[0]).max(0) as u64;
    if lifespan_days < span {
        return Err(LifespanError::LifespanShorterThanCommitSpan {
            lifespan: lifespan_days,
            span,
        });
    }
    let threshold = i64::from(rule.threshold_days);
    let idle: u64 = dates
        .windows(2)
        .map(|w| day_diff(w[1], w[0]))
        .filter(|&gap| gap > threshold)
        .map(|gap| if rule.exclusive { gap - 1 } else { gap } as u64)
        .sum();
    let ratio = if lifespan_days > 0 {
        idle as f64 / lifespan_days as f64
    } else {
        0.0
    };
    Ok((idle, ratio))
}

/// Life-span of a project: from its creation date to its last commit date.
///
/// Commits dated before creation are counted on the creation day, so the
/// commit span never exceeds the life-span.
pub fn compute_lifespan(
    project: &ProjectRecord,
    timeline: Option<&CommitTimeline>,
    rule: GapRule,
) -> LifespanRecord {
    let born = project.born();
    let mut dates: Vec<NaiveDate> = timeline
        .map(|t| t.dates().iter().map(|&d| d.max(born)).collect())
        .unwrap_or_default();
    dates.dedup();
    let died = dates.last().copied().unwrap_or(born).max(born);
    let days = day_diff(died, born) as u64;
    let (non_working_days, non_working_ratio) =
        non_working_ratio(&dates, days, rule).expect("clamped dates stay within the life-span");
    LifespanRecord {
        project_id: project.id.clone(),
        born,
        died,
        days,
        non_working_days,
        non_working_ratio,
    }
}

/// Whole-day life-span without the gap bookkeeping.
pub fn lifespan_days(project: &ProjectRecord, timeline: Option<&CommitTimeline>) -> u64 {
    let born = project.born();
    match timeline.and_then(CommitTimeline::last) {
        Some(last) if last > born => day_diff(last, born) as u64,
        _ => 0,
    }
}

/// Upper bin edges (inclusive) in days; a final open bin catches the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramSpec {
    edges: Vec<u64>,
}

impl HistogramSpec {
    pub const DEFAULT_EDGES: [u64; 7] = [1, 10, 30, 90, 180, 365, 1095];

    pub fn new(edges: Vec<u64>) -> Result<Self, LifespanError> {
        let increasing = edges.windows(2).all(|w| w[0] < w[1]);
        if edges.is_empty() || !increasing || edges[0] < 1 {
            return Err(LifespanError::InvalidHistogramEdges(edges));
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[u64] {
        &self.edges
    }

    /// `<=1`, `(1,10]`, ..., `>1095` for the default edges.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.edges.len() + 1);
        labels.push(format!("<={}", self.edges[0]));
        for w in self.edges.windows(2) {
            labels.push(format!("({},{}]", w[0], w[1]));
        }
        labels.push(format!(">{}", self.edges[self.edges.len() - 1]));
        labels
    }

    pub fn bin_of(&self, days: u64) -> usize {
        self.edges.partition_point(|&edge| edge < days)
    }
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            edges: Self::DEFAULT_EDGES.to_vec(),
        }
    }
}

pub fn lifespan_histogram(records: &[LifespanRecord], spec: &HistogramSpec) -> Vec<(String, u64)> {
    let mut counts = vec![0u64; spec.edges.len() + 1];
    for r in records {
        counts[spec.bin_of(r.days)] += 1;
    }
    spec.labels().into_iter().zip(counts).collect()
}
