//! Canonical dataset files and the study filter.
//!
//! A dataset is three line-delimited JSON files:
//!
//! ```text
//! projects:   {"id","created_at","deleted","forked_from","language","file_count",
//!              "labels":[..],"core_developers":[..],"description_word_count"}
//! commits:    {"project_id","committed_at"}
//! developers: {"id","followers"}
//! ```
//!
//! Timestamps are RFC 3339. Unknown keys are ignored and blank lines are
//! skipped. A project line may also carry `readme` text; when present its
//! word count replaces `description_word_count`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use chrono::{DateTime, Duration, NaiveDate, SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{normalize_language, CommitTimeline, DeveloperProfile, ProjectRecord};
use crate::features::description_word_count;
use crate::lifespan::lifespan_days;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct RawProject {
    id: String,
    created_at: String,
    deleted: bool,
    #[serde(default)]
    forked_from: Option<String>,
    #[serde(default)]
    language: Option<String>,
    file_count: u64,
    #[serde(default)]
    labels: Vec<String>,
    core_developers: Vec<String>,
    #[serde(default)]
    description_word_count: u64,
    #[serde(default)]
    readme: Option<String>,
}

#[derive(Deserialize)]
struct RawCommit {
    project_id: String,
    committed_at: String,
}

#[derive(Deserialize)]
struct RawDeveloper {
    id: String,
    followers: u64,
}

fn parse_timestamp(s: &str, line: usize) -> Result<DateTime<Utc>, IngestError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| IngestError::Malformed {
            line,
            reason: format!("bad timestamp `{s}`: {e}"),
        })
}

fn for_each_line<T, R, F>(reader: R, mut f: F) -> Result<(), IngestError>
where
    T: DeserializeOwned,
    R: BufRead,
    F: FnMut(usize, T) -> Result<(), IngestError>,
{
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: T = serde_json::from_str(&line).map_err(|e| IngestError::Malformed {
            line: line_no,
            reason: e.to_string(),
        })?;
        f(line_no, raw)?;
    }
    Ok(())
}

pub fn parse_projects<R: BufRead>(reader: R) -> Result<Vec<ProjectRecord>, IngestError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for_each_line(reader, |line, raw: RawProject| {
        if !ids.insert(raw.id.clone()) {
            return Err(IngestError::DuplicateId { line, id: raw.id });
        }
        let created_at = parse_timestamp(&raw.created_at, line)?;
        let description_word_count = match &raw.readme {
            Some(text) => description_word_count(text),
            None => raw.description_word_count,
        };
        out.push(ProjectRecord {
            id: raw.id,
            created_at,
            deleted: raw.deleted,
            forked_from: raw.forked_from,
            language: normalize_language(raw.language.as_deref().unwrap_or("")),
            file_count: raw.file_count,
            labels: raw.labels.into_iter().collect(),
            core_developer_ids: raw.core_developers.into_iter().collect(),
            description_word_count,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Groups commits per project, truncated to UTC calendar days.
pub fn parse_commits<R: BufRead>(reader: R) -> Result<BTreeMap<String, CommitTimeline>, IngestError> {
    let mut days: BTreeMap<String, Vec<NaiveDate>> = BTreeMap::new();
    for_each_line(reader, |line, raw: RawCommit| {
        let at = parse_timestamp(&raw.committed_at, line)?;
        days.entry(raw.project_id).or_default().push(at.date_naive());
        Ok(())
    })?;
    Ok(days
        .into_iter()
        .map(|(id, dates)| {
            let timeline = CommitTimeline::new(id.clone(), dates);
            (id, timeline)
        })
        .collect())
}

pub fn parse_developers<R: BufRead>(reader: R) -> Result<BTreeMap<String, DeveloperProfile>, IngestError> {
    let mut out = BTreeMap::new();
    for_each_line(reader, |line, raw: RawDeveloper| match out.entry(raw.id.clone()) {
        Entry::Occupied(_) => Err(IngestError::DuplicateId { line, id: raw.id }),
        Entry::Vacant(slot) => {
            slot.insert(DeveloperProfile {
                id: raw.id,
                follower_count: raw.followers,
            });
            Ok(())
        }
    })?;
    Ok(out)
}

#[derive(Serialize)]
struct ProjectLine<'a> {
    id: &'a str,
    created_at: String,
    deleted: bool,
    forked_from: Option<&'a str>,
    language: &'a str,
    file_count: u64,
    labels: &'a BTreeSet<String>,
    core_developers: &'a BTreeSet<String>,
    description_word_count: u64,
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn write_projects<W: Write>(mut w: W, projects: &[ProjectRecord]) -> std::io::Result<()> {
    for p in projects {
        let line = ProjectLine {
            id: &p.id,
            created_at: format_timestamp(&p.created_at),
            deleted: p.deleted,
            forked_from: p.forked_from.as_deref(),
            language: &p.language,
            file_count: p.file_count,
            labels: &p.labels,
            core_developers: &p.core_developer_ids,
            description_word_count: p.description_word_count,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_commits<W: Write>(mut w: W, commits: &[(String, DateTime<Utc>)]) -> std::io::Result<()> {
    for (project_id, at) in commits {
        serde_json::to_writer(
            &mut w,
            &serde_json::json!({ "project_id": project_id, "committed_at": format_timestamp(at) }),
        )?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_developers<W: Write>(mut w: W, developers: &[DeveloperProfile]) -> std::io::Result<()> {
    for d in developers {
        serde_json::to_writer(&mut w, &serde_json::json!({ "id": d.id, "followers": d.follower_count }))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Study selection rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudyFilterConfig {
    /// Snapshot date of the dataset.
    pub cutoff: NaiveDate,
    /// Required silence before the cutoff. 0 only rejects commits after it.
    pub quiescence_days: u32,
    pub exclude_forks: bool,
    pub exclude_deleted: bool,
    pub min_lifespan_days: u64,
}

impl StudyFilterConfig {
    pub const DEFAULT_QUIESCENCE_DAYS: u32 = 180;
    /// Minimum life-span used to select naturally ended projects.
    pub const NATURAL_DEATH_DAYS: u64 = 10;

    pub fn new(cutoff: NaiveDate) -> Self {
        Self {
            cutoff,
            quiescence_days: Self::DEFAULT_QUIESCENCE_DAYS,
            exclude_forks: true,
            exclude_deleted: true,
            min_lifespan_days: 0,
        }
    }

    /// Filter that keeps every project whose commits end by `cutoff`.
    pub fn identity(cutoff: NaiveDate) -> Self {
        Self {
            cutoff,
            quiescence_days: 0,
            exclude_forks: false,
            exclude_deleted: false,
            min_lifespan_days: 0,
        }
    }

    /// Latest commit date a retained project may have.
    pub fn last_allowed_commit(&self) -> NaiveDate {
        self.cutoff - Duration::days(i64::from(self.quiescence_days))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    Quiescence,
    Fork,
    Deleted,
    MinLifespan,
}

impl FilterRule {
    pub const ALL: [FilterRule; 4] = [
        FilterRule::Quiescence,
        FilterRule::Fork,
        FilterRule::Deleted,
        FilterRule::MinLifespan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterRule::Quiescence => "quiescence",
            FilterRule::Fork => "fork",
            FilterRule::Deleted => "deleted",
            FilterRule::MinLifespan => "min_lifespan",
        }
    }
}

/// Outcome of one rule evaluated on its own over the whole input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleTally {
    pub rule: FilterRule,
    pub kept: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<ProjectRecord>,
    pub total: usize,
    pub rules: Vec<RuleTally>,
    pub warnings: Vec<String>,
}

impl FilterOutcome {
    pub fn dropped(&self) -> usize {
        self.total - self.kept.len()
    }
}

fn passes(
    rule: FilterRule,
    project: &ProjectRecord,
    timeline: Option<&CommitTimeline>,
    cfg: &StudyFilterConfig,
    last_allowed: NaiveDate,
) -> bool {
    match rule {
        FilterRule::Quiescence => timeline
            .and_then(CommitTimeline::last)
            .is_none_or(|last| last <= last_allowed),
        FilterRule::Fork => !cfg.exclude_forks || project.forked_from.is_none(),
        FilterRule::Deleted => !cfg.exclude_deleted || !project.deleted,
        FilterRule::MinLifespan => lifespan_days(project, timeline) >= cfg.min_lifespan_days,
    }
}

/// Keeps the projects that satisfy every rule, preserving input order.
pub fn apply_study_filter(
    projects: &[ProjectRecord],
    timelines: &BTreeMap<String, CommitTimeline>,
    cfg: &StudyFilterConfig,
) -> FilterOutcome {
    let last_allowed = cfg.last_allowed_commit();
    let mut tallies: Vec<RuleTally> = FilterRule::ALL
        .iter()
        .map(|&rule| RuleTally {
            rule,
            kept: 0,
            dropped: 0,
        })
        .collect();
    let mut kept = Vec::new();

    for p in projects {
        let timeline = timelines.get(&p.id);
        let mut all = true;
        for tally in &mut tallies {
            if passes(tally.rule, p, timeline, cfg, last_allowed) {
                tally.kept += 1;
            } else {
                tally.dropped += 1;
                all = false;
            }
        }
        if all {
            kept.push(p.clone());
        }
    }

    let mut warnings = Vec::new();
    let earliest = timelines.values().filter_map(CommitTimeline::first).min();
    if let Some(first) = earliest {
        if cfg.cutoff < first {
            warnings.push(format!(
                "cutoff {} is earlier than every commit in the dataset (first commit {first})",
                cfg.cutoff
            ));
        }
    }

    FilterOutcome {
        kept,
        total: projects.len(),
        rules: tallies,
        warnings,
    }
}

/// Failure to load one of the dataset files.
#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct LoadError {
    pub path: std::path::PathBuf,
    #[source]
    pub source: IngestError,
}

/// The three canonical files parsed into memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub projects: Vec<ProjectRecord>,
    pub timelines: BTreeMap<String, CommitTimeline>,
    pub developers: BTreeMap<String, DeveloperProfile>,
}

impl Dataset {
    pub fn open(
        projects: &std::path::Path,
        commits: &std::path::Path,
        developers: &std::path::Path,
    ) -> Result<Self, LoadError> {
        fn read<T>(
            path: &std::path::Path,
            parse: impl FnOnce(std::io::BufReader<std::fs::File>) -> Result<T, IngestError>,
        ) -> Result<T, LoadError> {
            let wrap = |source| LoadError {
                path: path.to_path_buf(),
                source,
            };
            let file = std::fs::File::open(path).map_err(|e| wrap(IngestError::Io(e)))?;
            parse(std::io::BufReader::new(file)).map_err(wrap)
        }
        Ok(Self {
            projects: read(projects, parse_projects)?,
            timelines: read(commits, parse_commits)?,
            developers: read(developers, parse_developers)?,
        })
    }

    pub fn validate(&self) -> crate::domain::ValidationReport {
        crate::domain::validate_dataset(&self.projects, &self.timelines, &self.developers)
    }

    /// Keeps only the listed projects (and their timelines).
    pub fn restrict_to(&mut self, ids: &HashSet<String>) {
        self.projects.retain(|p| ids.contains(&p.id));
        self.timelines.retain(|id, _| ids.contains(id));
    }

    pub fn timeline(&self, project_id: &str) -> Option<&CommitTimeline> {
        self.timelines.get(project_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    const FULL: &str = r#"{"id":"p1","created_at":"2012-03-04T05:06:07Z","deleted":false,"forked_from":null,"language":"java","file_count":42,"labels":["web","API"],"core_developers":["d1","d2"],"description_word_count":17,"stars":3}"#;

    #[test]
    fn full_project_line() {
        let ps = parse_projects(FULL.as_bytes()).unwrap();
        assert_eq!(ps.len(), 1);
        let p = &ps[0];
        assert_eq!(p.id, "p1");
        assert_eq!(p.created_at, Utc.with_ymd_and_hms(2012, 3, 4, 5, 6, 7).unwrap());
        assert_eq!(p.language, "Java");
        assert_eq!(p.file_count, 42);
        assert_eq!(p.labels, ["API".to_string(), "web".to_string()].into());
        assert_eq!(p.core_developer_ids.len(), 2);
        assert_eq!(p.description_word_count, 17);
        assert_eq!(p.forked_from, None);
    }

    #[test]
    fn missing_created_at_is_line_error() {
        let input = format!(
            "{FULL}\n{}\n",
            r#"{"id":"p2","deleted":false,"file_count":1,"core_developers":["d"]}"#
        );
        match parse_projects(input.as_bytes()) {
            Err(IngestError::Malformed { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("created_at"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_project_id() {
        let input = format!("{FULL}\n{FULL}\n");
        match parse_projects(input.as_bytes()) {
            Err(IngestError::DuplicateId { id, line }) => assert_eq!((id.as_str(), line), ("p1", 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn readme_text_overrides_count() {
        let line = r#"{"id":"p","created_at":"2012-01-01T00:00:00Z","deleted":false,"file_count":1,"core_developers":["d"],"description_word_count":99,"readme":"two words"}"#;
        assert_eq!(parse_projects(line.as_bytes()).unwrap()[0].description_word_count, 2);
    }

    #[test]
    fn commits_collapse_to_days() {
        let input = concat!(
            r#"{"project_id":"p1","committed_at":"2012-01-03T10:00:00Z"}"#,
            "\n",
            r#"{"project_id":"p1","committed_at":"2012-01-03T23:59:00Z"}"#,
            "\n"
        );
        let t = parse_commits(input.as_bytes()).unwrap();
        assert_eq!(t["p1"].dates(), &[ymd(2012, 1, 3)]);
    }

    #[test]
    fn commits_sorted_and_offsets_normalized() {
        let input = concat!(
            r#"{"project_id":"p1","committed_at":"2012-02-01T00:00:00Z"}"#,
            "\n",
            r#"{"project_id":"p1","committed_at":"2012-01-31T23:30:00-02:00"}"#,
            "\n",
            r#"{"project_id":"p1","committed_at":"2011-12-01T00:00:00Z"}"#,
        );
        let t = parse_commits(input.as_bytes()).unwrap();
        assert_eq!(t["p1"].dates(), &[ymd(2011, 12, 1), ymd(2012, 2, 1)]);
    }

    #[test]
    fn empty_commit_stream() {
        assert!(parse_commits(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn bad_commit_timestamp() {
        let input = "\n{\"project_id\":\"p1\",\"committed_at\":\"yesterday\"}\n";
        match parse_commits(input.as_bytes()) {
            Err(IngestError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn developers() {
        let d = parse_developers(r#"{"id":"d1","followers":5}"#.as_bytes()).unwrap();
        assert_eq!(d["d1"].follower_count, 5);
        assert!(matches!(
            parse_developers(r#"{"id":"d1","followers":-5}"#.as_bytes()),
            Err(IngestError::Malformed { line: 1, .. })
        ));
        let dup = "{\"id\":\"d1\",\"followers\":1}\n{\"id\":\"d1\",\"followers\":2}\n";
        assert!(matches!(
            parse_developers(dup.as_bytes()),
            Err(IngestError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn projects_round_trip_through_writer() {
        let ps = parse_projects(FULL.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_projects(&mut buf, &ps).unwrap();
        assert_eq!(parse_projects(buf.as_slice()).unwrap(), ps);
    }

    fn project(id: &str, created: NaiveDate) -> ProjectRecord {
        ProjectRecord {
            id: id.into(),
            created_at: Utc.from_utc_datetime(&created.and_hms_opt(0, 0, 0).unwrap()),
            deleted: false,
            forked_from: None,
            language: "Java".into(),
            file_count: 1,
            labels: BTreeSet::new(),
            core_developer_ids: ["d".to_string()].into(),
            description_word_count: 0,
        }
    }

    fn timelines(entries: &[(&str, Vec<NaiveDate>)]) -> BTreeMap<String, CommitTimeline> {
        entries
            .iter()
            .map(|(id, d)| (id.to_string(), CommitTimeline::new(*id, d.clone())))
            .collect()
    }

    #[test]
    fn six_month_quiescence_window() {
        let cfg = StudyFilterConfig::new(ymd(2013, 10, 30));
        assert_eq!(cfg.last_allowed_commit(), ymd(2013, 5, 3));
        let ps = vec![project("may", ymd(2013, 1, 1)), project("june", ymd(2013, 1, 1))];
        let t = timelines(&[("may", vec![ymd(2013, 5, 1)]), ("june", vec![ymd(2013, 6, 1)])]);
        let out = apply_study_filter(&ps, &t, &cfg);
        let ids: Vec<_> = out.kept.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["may"]);
        assert_eq!(out.rules[0], RuleTally { rule: FilterRule::Quiescence, kept: 1, dropped: 1 });
    }

    #[test]
    fn forks_and_deleted_excluded() {
        let mut fork = project("fork", ymd(2012, 1, 1));
        fork.forked_from = Some("orig".into());
        let mut gone = project("gone", ymd(2012, 1, 1));
        gone.deleted = true;
        let cfg = StudyFilterConfig::new(ymd(2013, 10, 30));
        let out = apply_study_filter(&[fork, gone, project("ok", ymd(2012, 1, 1))], &BTreeMap::new(), &cfg);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id, "ok");
        assert_eq!(out.dropped(), 2);
    }

    #[test]
    fn natural_death_project_kept() {
        let mut cfg = StudyFilterConfig::new(ymd(2013, 10, 30));
        cfg.min_lifespan_days = StudyFilterConfig::NATURAL_DEATH_DAYS;
        let ps = vec![project("p", ymd(2012, 12, 2)), project("short", ymd(2012, 12, 30))];
        let t = timelines(&[("p", vec![ymd(2013, 1, 1)]), ("short", vec![ymd(2013, 1, 1)])]);
        let out = apply_study_filter(&ps, &t, &cfg);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id, "p");
    }

    #[test]
    fn commitless_projects_need_zero_min_lifespan() {
        let ps = vec![project("quiet", ymd(2012, 1, 1))];
        let mut cfg = StudyFilterConfig::new(ymd(2013, 10, 30));
        assert_eq!(apply_study_filter(&ps, &BTreeMap::new(), &cfg).kept.len(), 1);
        cfg.min_lifespan_days = 1;
        assert!(apply_study_filter(&ps, &BTreeMap::new(), &cfg).kept.is_empty());
    }

    #[test]
    fn early_cutoff_warns() {
        let ps = vec![project("p", ymd(2012, 1, 1))];
        let t = timelines(&[("p", vec![ymd(2012, 2, 1)])]);
        let out = apply_study_filter(&ps, &t, &StudyFilterConfig::new(ymd(2011, 1, 1)));
        assert_eq!(out.warnings.len(), 1);
        assert!(out.kept.is_empty());
    }
}
