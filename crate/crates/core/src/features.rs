//! Per-project characteristics and corpus-level tallies.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{DeveloperProfile, FeatureVector, ProjectRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("project {project}: unknown core developer {developer}")]
    UnknownDeveloper { project: String, developer: String },
    #[error("unknown follower aggregation `{0}` (expected sum, mean or max)")]
    UnknownAggregation(String),
}

/// How follower counts of the core developers combine into one number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FollowerAggregation {
    #[default]
    Sum,
    Mean,
    Max,
}

impl FromStr for FollowerAggregation {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Self::Sum),
            "mean" => Ok(Self::Mean),
            "max" => Ok(Self::Max),
            _ => Err(FeatureError::UnknownAggregation(s.to_string())),
        }
    }
}

pub fn extract_features(
    project: &ProjectRecord,
    developers: &BTreeMap<String, DeveloperProfile>,
    aggregation: FollowerAggregation,
) -> Result<FeatureVector, FeatureError> {
    let followers = project
        .core_developer_ids
        .iter()
        .map(|id| {
            developers
                .get(id)
                .map(|d| d.follower_count)
                .ok_or_else(|| FeatureError::UnknownDeveloper {
                    project: project.id.clone(),
                    developer: id.clone(),
                })
        })
        .collect::<Result<Vec<u64>, _>>()?;

    let total: u64 = followers.iter().sum();
    let m = match aggregation {
        FollowerAggregation::Sum => total as f64,
        FollowerAggregation::Mean if followers.is_empty() => 0.0,
        FollowerAggregation::Mean => total as f64 / followers.len() as f64,
        FollowerAggregation::Max => followers.iter().copied().max().unwrap_or(0) as f64,
    };

    Ok(FeatureVector {
        project_id: project.id.clone(),
        n: project.file_count,
        language: project.language.clone(),
        m,
        labels: project.labels.clone(),
        core_dev_count: project.core_developer_ids.len(),
        description_word_count: project.description_word_count,
    })
}

/// Number of maximal non-whitespace runs.
pub fn description_word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Share of each language among projects that declare one, largest first.
pub fn language_usage(projects: &[ProjectRecord]) -> Vec<(String, f64)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for p in projects.iter().filter(|p| !p.language.is_empty()) {
        *counts.entry(p.language.as_str()).or_default() += 1;
    }
    let total: u64 = counts.values().sum();
    let mut shares: Vec<(String, u64)> = counts.into_iter().map(|(l, c)| (l.to_string(), c)).collect();
    // integer counts keep the ordering exact
    shares.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    shares
        .into_iter()
        .map(|(l, c)| (l, c as f64 / total as f64))
        .collect()
}

/// `(core developer count, number of projects)` ascending by count.
pub fn core_dev_count_distribution(projects: &[ProjectRecord]) -> Vec<(usize, usize)> {
    let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
    for p in projects {
        *tally.entry(p.core_developer_ids.len()).or_default() += 1;
    }
    tally.into_iter().collect()
}
