//! Shared domain types and dataset validation.
//!
//! Nothing in here touches the filesystem. Types are plain data and are
//! cheap to share across worker threads once built.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

/// Language every language factor is expressed relative to.
pub const BASELINE_LANGUAGE: &str = "Java";

/// Canonical spellings for the languages the reference tables cover.
pub const CANONICAL_LANGUAGES: [&str; 11] = [
    "Java",
    "C#",
    "JavaScript",
    "Objective-C",
    "C++",
    "PHP",
    "C",
    "Python",
    "Ruby",
    "Shell",
    "Perl",
];

/// Trims the tag and maps known languages onto their canonical casing.
/// Unknown languages are kept verbatim (after trimming).
pub fn normalize_language(raw: &str) -> String {
    let trimmed = raw.trim();
    CANONICAL_LANGUAGES
        .iter()
        .find(|c| c.eq_ignore_ascii_case(trimmed))
        .map(|c| (*c).to_string())
        .unwrap_or_else(|| trimmed.to_string())
}

/// Static metadata of one repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub deleted: bool,
    pub forked_from: Option<String>,
    /// Empty when the repository has no detected language.
    pub language: String,
    pub file_count: u64,
    pub labels: BTreeSet<String>,
    pub core_developer_ids: BTreeSet<String>,
    pub description_word_count: u64,
}

impl ProjectRecord {
    /// Calendar date (UTC) on which the project was created.
    pub fn born(&self) -> NaiveDate {
        self.created_at.date_naive()
    }
}

/// Distinct commit dates of one project, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitTimeline {
    project_id: String,
    dates: Vec<NaiveDate>,
}

impl CommitTimeline {
    /// Builds a timeline from dates in any order; duplicates collapse.
    pub fn new(project_id: impl Into<String>, mut dates: Vec<NaiveDate>) -> Self {
        dates.sort_unstable();
        dates.dedup();
        Self {
            project_id: project_id.into(),
            dates,
        }
    }

    pub fn empty(project_id: impl Into<String>) -> Self {
        Self::new(project_id, Vec::new())
    }

    pub fn project_id(&self) -> &str {
        &self.project_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn first(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeveloperProfile {
    pub id: String,
    pub follower_count: u64,
}

/// Birth, death and idle-time summary of one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub project_id: String,
    pub born: NaiveDate,
    pub died: NaiveDate,
    /// Whole days between `born` and `died`.
    pub days: u64,
    pub non_working_days: u64,
    /// `non_working_days / days`, or 0 when `days` is 0.
    pub non_working_ratio: f64,
}

/// Inputs of the prediction model for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub project_id: String,
    /// File count.
    pub n: u64,
    pub language: String,
    /// Aggregated follower count over the core developers.
    pub m: f64,
    pub labels: BTreeSet<String>,
    pub core_dev_count: usize,
    pub description_word_count: u64,
}

/// One broken invariant found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyProjectId { index: usize },
    DuplicateProjectId { id: String },
    SelfFork { project: String },
    EmptyCoreDevelopers { project: String },
    UnknownDeveloper { project: String, developer: String },
    DanglingProjectReference { project: String },
    TimelineKeyMismatch { key: String, project: String },
    EmptyDeveloperId,
    DeveloperKeyMismatch { key: String, developer: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyProjectId { index } => write!(f, "project #{index}: empty project id"),
            Violation::DuplicateProjectId { id } => write!(f, "project {id}: duplicate project id"),
            Violation::SelfFork { project } => write!(f, "project {project}: forked from itself"),
            Violation::EmptyCoreDevelopers { project } => {
                write!(f, "project {project}: empty core developer set")
            }
            Violation::UnknownDeveloper { project, developer } => {
                write!(f, "project {project}: unknown developer {developer}")
            }
            Violation::DanglingProjectReference { project } => {
                write!(f, "timeline {project}: dangling project reference")
            }
            Violation::TimelineKeyMismatch { key, project } => {
                write!(f, "timeline keyed {key} belongs to project {project}")
            }
            Violation::EmptyDeveloperId => write!(f, "developer with empty id"),
            Violation::DeveloperKeyMismatch { key, developer } => {
                write!(f, "developer keyed {key} has id {developer}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every record invariant and cross-reference of a dataset.
///
/// `forked_from` is not required to resolve: the parent of a fork is
/// normally outside the studied set.
pub fn validate_dataset(
    projects: &[ProjectRecord],
    timelines: &BTreeMap<String, CommitTimeline>,
    developers: &BTreeMap<String, DeveloperProfile>,
) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen: HashSet<&str> = HashSet::with_capacity(projects.len());

    for (index, p) in projects.iter().enumerate() {
        if p.id.is_empty() {
            violations.push(Violation::EmptyProjectId { index });
        } else if !seen.insert(p.id.as_str()) {
            violations.push(Violation::DuplicateProjectId { id: p.id.clone() });
        }
        if p.forked_from.as_deref() == Some(p.id.as_str()) {
            violations.push(Violation::SelfFork {
                project: p.id.clone(),
            });
        }
        if p.core_developer_ids.is_empty() {
            violations.push(Violation::EmptyCoreDevelopers {
                project: p.id.clone(),
            });
        }
        for dev in &p.core_developer_ids {
            if !developers.contains_key(dev) {
                violations.push(Violation::UnknownDeveloper {
                    project: p.id.clone(),
                    developer: dev.clone(),
                });
            }
        }
    }

    for (key, timeline) in timelines {
        if key != timeline.project_id() {
            violations.push(Violation::TimelineKeyMismatch {
                key: key.clone(),
                project: timeline.project_id().to_string(),
            });
        }
        if !seen.contains(key.as_str()) {
            violations.push(Violation::DanglingProjectReference {
                project: key.clone(),
            });
        }
    }

    for (key, dev) in developers {
        if dev.id.is_empty() {
            violations.push(Violation::EmptyDeveloperId);
        } else if key != &dev.id {
            violations.push(Violation::DeveloperKeyMismatch {
                key: key.clone(),
                developer: dev.id.clone(),
            });
        }
    }

    ValidationReport { violations }
}
