//! Seeded synthetic datasets with a planted ground truth.
//!
//! Every project draws from its own ChaCha stream `(seed, index)`, so the
//! output does not depend on how many workers generate it. Life-spans are
//! realized from the prediction model with the configured parameters, and
//! commit timelines are laid out to hit a chosen non-working ratio.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CommitTimeline, DeveloperProfile, FeatureVector, ProjectRecord, CANONICAL_LANGUAGES};
use crate::ingest;
use crate::model::{predict_lifespan, ModelParams};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(
        "project #{index}: non-working ratio in [{lo}, {hi}] is infeasible for a {lifespan_days}-day life-span"
    )]
    InfeasibleRatio {
        index: usize,
        lifespan_days: u64,
        lo: f64,
        hi: f64,
    },
    #[error("target ratio {target} cannot be realized within {lifespan_days} days (gap threshold {gap_threshold})")]
    InfeasibleTimeline {
        lifespan_days: u64,
        target: f64,
        gap_threshold: u32,
    },
    #[error("project #{index}: no feature draw reached the minimum planted life-span after {attempts} attempts")]
    NoViableFeatures { index: usize, attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelChance {
    pub label: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub project_count: usize,
    pub language_weights: BTreeMap<String, f64>,
    /// Inclusive `[lo, hi]`.
    pub file_count_range: [u64; 2],
    /// Followers per developer, inclusive.
    pub follower_range: [u64; 2],
    pub core_developer_range: [usize; 2],
    pub label_pool: Vec<LabelChance>,
    pub target_nonworking_ratio_range: [f64; 2],
    /// Standard deviation (days) of additive noise on the planted life-span.
    pub noise_sd: f64,
    /// Planted model.
    pub params: ModelParams,
    pub gap_threshold_days: u32,
    /// Feature draws planting less than this are redrawn.
    pub min_planted_lifespan: f64,
    /// Longest step between commits inside a working stretch.
    pub max_working_step: u32,
    pub description_word_range: [u64; 2],
    pub fork_probability: f64,
    pub deleted_probability: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        let label_pool = [
            ("editor", 0.04),
            ("Linux", 0.05),
            ("Database", 0.06),
            ("web", 0.10),
            ("Maps", 0.05),
            ("bootstrap", 0.04),
        ]
        .into_iter()
        .map(|(label, probability)| LabelChance {
            label: label.to_string(),
            probability,
        })
        .collect();
        Self {
            seed: 42,
            project_count: 1000,
            language_weights: CANONICAL_LANGUAGES.iter().map(|l| (l.to_string(), 1.0)).collect(),
            file_count_range: [16, 2048],
            follower_range: [0, 300],
            core_developer_range: [1, 3],
            label_pool,
            target_nonworking_ratio_range: [0.0, 0.25],
            noise_sd: 0.0,
            params: ModelParams::reference(),
            gap_threshold_days: 6,
            min_planted_lifespan: 10.0,
            max_working_step: 4,
            description_word_range: [0, 1500],
            fork_probability: 0.05,
            deleted_probability: 0.02,
        }
    }
}

fn probability_ok(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidConfig(m.to_string()));
        if self.project_count == 0 {
            return bad("project_count must be positive");
        }
        if self.language_weights.is_empty()
            || self.language_weights.values().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.language_weights.values().sum::<f64>() <= 0.0
        {
            return bad("language_weights must be non-negative with a positive total");
        }
        if self.file_count_range[0] > self.file_count_range[1]
            || self.follower_range[0] > self.follower_range[1]
            || self.description_word_range[0] > self.description_word_range[1]
        {
            return bad("integer ranges must satisfy lo <= hi");
        }
        let [dev_lo, dev_hi] = self.core_developer_range;
        if dev_lo == 0 || dev_lo > dev_hi {
            return bad("core_developer_range must satisfy 1 <= lo <= hi");
        }
        if self.label_pool.iter().any(|l| !probability_ok(l.probability))
            || !probability_ok(self.fork_probability)
            || !probability_ok(self.deleted_probability)
        {
            return bad("probabilities must lie in [0, 1]");
        }
        let [lo, hi] = self.target_nonworking_ratio_range;
        if !(0.0 <= lo && lo <= hi && hi <= 0.95) {
            return bad("target_nonworking_ratio_range must satisfy 0 <= lo <= hi <= 0.95");
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad("noise_sd must be finite and non-negative");
        }
        if self.gap_threshold_days == 0 {
            return bad("gap_threshold_days must be at least 1");
        }
        if self.max_working_step == 0 || self.max_working_step > self.gap_threshold_days {
            return bad("max_working_step must lie in [1, gap_threshold_days]");
        }
        if !self.min_planted_lifespan.is_finite() {
            return bad("min_planted_lifespan must be finite");
        }
        self.params
            .validate()
            .map_err(|e| GenError::InvalidConfig(e.to_string()))
    }
}

/// Planted values for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub id: String,
    /// Model prediction before noise and rounding.
    pub planted_lp: f64,
    /// Non-working ratio of the emitted timeline.
    pub planted_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub projects: Vec<ProjectRecord>,
    pub commits: Vec<(String, DateTime<Utc>)>,
    pub developers: Vec<DeveloperProfile>,
    pub truth: Vec<TruthRecord>,
}

impl GeneratedDataset {
    pub fn timelines(&self) -> BTreeMap<String, CommitTimeline> {
        let mut days: BTreeMap<String, Vec<NaiveDate>> = BTreeMap::new();
        for (id, at) in &self.commits {
            days.entry(id.clone()).or_default().push(at.date_naive());
        }
        days.into_iter()
            .map(|(id, d)| (id.clone(), CommitTimeline::new(id, d)))
            .collect()
    }

    pub fn developer_map(&self) -> BTreeMap<String, DeveloperProfile> {
        self.developers.iter().map(|d| (d.id.clone(), d.clone())).collect()
    }

    pub fn write_truth<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.truth {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes the projects, commits, developers and truth files.
    pub fn write_all<W: Write>(&self, projects: W, commits: W, developers: W, truth: W) -> std::io::Result<()> {
        ingest::write_projects(projects, &self.projects)?;
        ingest::write_commits(commits, &self.commits)?;
        ingest::write_developers(developers, &self.developers)?;
        self.write_truth(truth)
    }
}

/// Idle-day total in `{0} ∪ [min_gap, lifespan]`, restricted to
/// `[lo, hi]`, nearest to `goal`.
fn nearest_achievable(goal: f64, lifespan: u64, min_gap: u64, lo: u64, hi: u64) -> Option<u64> {
    let hi = hi.min(lifespan);
    let goal_int = goal.round().max(0.0) as u64;
    let mut best: Option<u64> = None;
    let mut consider = |d: u64| {
        let closer = best.is_none_or(|b| (d as f64 - goal).abs() < (b as f64 - goal).abs());
        if closer {
            best = Some(d);
        }
    };
    if lo == 0 {
        consider(0);
    }
    let start = lo.max(min_gap);
    if start <= hi {
        consider(goal_int.clamp(start, hi));
    }
    best
}

/// Day offsets `0..=lifespan` whose gaps longer than `threshold` sum to
/// exactly `idle`. Working stretches advance by `1..=max_step` days.
fn plant_gaps<R: Rng>(lifespan: u64, idle: u64, threshold: u32, max_step: u32, rng: &mut R) -> Vec<u64> {
    let min_gap = u64::from(threshold) + 1;
    let work = lifespan - idle;
    // consecutive gaps are separated by at least one working day
    let gap_count = if idle == 0 {
        0
    } else {
        let most = (idle / min_gap).min(work + 1).clamp(1, 3);
        rng.random_range(1..=most)
    };

    let gaps = split_with_minimum(idle, gap_count, min_gap, rng);
    let mut stretches = vec![0u64; gap_count as usize + 1];
    let mut spare = work;
    for s in stretches.iter_mut().take(gap_count as usize).skip(1) {
        *s = 1;
        spare -= 1;
    }
    for _ in 0..spare.min(4096) {
        let i = rng.random_range(0..stretches.len());
        stretches[i] += 1;
    }
    // large remainders go to the first stretch in one piece
    stretches[0] += spare.saturating_sub(4096);

    let mut offsets = vec![0u64];
    let mut pos = 0u64;
    for (i, stretch) in stretches.iter().enumerate() {
        let mut remaining = *stretch;
        while remaining > 0 {
            let step = rng.random_range(1..=u64::from(max_step).min(remaining));
            pos += step;
            remaining -= step;
            offsets.push(pos);
        }
        if let Some(gap) = gaps.get(i) {
            pos += gap;
            offsets.push(pos);
        }
    }
    debug_assert_eq!(pos, lifespan);
    offsets
}

fn split_with_minimum<R: Rng>(total: u64, parts: u64, minimum: u64, rng: &mut R) -> Vec<u64> {
    if parts == 0 {
        return Vec::new();
    }
    let extra = total - parts * minimum;
    let mut cuts: Vec<u64> = (1..parts).map(|_| rng.random_range(0..=extra)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts as usize);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(extra)) {
        out.push(minimum + c - prev);
        prev = c;
    }
    out
}

/// Commit day offsets (day 0 to `lifespan_days`, daily while working)
/// whose non-working ratio lies within `2 / lifespan_days` of `target_ratio`.
pub fn realize_timeline(
    lifespan_days: u64,
    target_ratio: f64,
    gap_threshold: u32,
    seed: u64,
) -> Result<Vec<u64>, GenError> {
    let infeasible = || GenError::InfeasibleTimeline {
        lifespan_days,
        target: target_ratio,
        gap_threshold,
    };
    if lifespan_days == 0 || !(0.0..=1.0).contains(&target_ratio) {
        return Err(infeasible());
    }
    let goal = target_ratio * lifespan_days as f64;
    let lo = (goal - 2.0 - 1e-9).ceil().max(0.0) as u64;
    let hi = (goal + 2.0 + 1e-9).floor() as u64;
    let idle = nearest_achievable(goal, lifespan_days, u64::from(gap_threshold) + 1, lo, hi)
        .ok_or_else(infeasible)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(plant_gaps(lifespan_days, idle, gap_threshold, 1, &mut rng))
}

struct ProjectBundle {
    project: ProjectRecord,
    commits: Vec<(String, DateTime<Utc>)>,
    developers: Vec<DeveloperProfile>,
    truth: TruthRecord,
}

const MAX_FEATURE_ATTEMPTS: usize = 1000;

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2012, 1, 1, 0, 0, 0).unwrap()
}

fn generate_one(cfg: &GenConfig, index: usize, languages: &[&String], weights: &WeightedIndex<f64>) -> Result<ProjectBundle, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);

    let id = format!("p{index:06}");
    let language = languages[weights.sample(&mut rng)].clone();

    let mut draw = None;
    for _ in 0..MAX_FEATURE_ATTEMPTS {
        let n = rng.random_range(cfg.file_count_range[0]..=cfg.file_count_range[1]);
        let dev_count = rng.random_range(cfg.core_developer_range[0]..=cfg.core_developer_range[1]);
        let followers: Vec<u64> = (0..dev_count)
            .map(|_| rng.random_range(cfg.follower_range[0]..=cfg.follower_range[1]))
            .collect();
        let labels: BTreeSet<String> = cfg
            .label_pool
            .iter()
            .filter(|l| rng.random_bool(l.probability))
            .map(|l| l.label.clone())
            .collect();
        let features = FeatureVector {
            project_id: id.clone(),
            n,
            language: language.clone(),
            m: followers.iter().sum::<u64>() as f64,
            labels,
            core_dev_count: dev_count,
            description_word_count: 0,
        };
        let lp = predict_lifespan(&features, &cfg.params).lp;
        if lp >= cfg.min_planted_lifespan {
            draw = Some((features, followers, lp));
            break;
        }
    }
    let (features, followers, planted_lp) = draw.ok_or(GenError::NoViableFeatures {
        index,
        attempts: MAX_FEATURE_ATTEMPTS,
    })?;

    let noise = if cfg.noise_sd > 0.0 {
        Normal::new(0.0, cfg.noise_sd)
            .expect("validated noise_sd")
            .sample(&mut rng)
    } else {
        0.0
    };
    let lifespan_days = (planted_lp + noise).round().max(1.0) as u64;

    let [lo, hi] = cfg.target_nonworking_ratio_range;
    let target = if lo < hi { rng.random_range(lo..=hi) } else { lo };
    let span = lifespan_days as f64;
    let idle = nearest_achievable(
        target * span,
        lifespan_days,
        u64::from(cfg.gap_threshold_days) + 1,
        (lo * span - 1e-9).ceil().max(0.0) as u64,
        (hi * span + 1e-9).floor() as u64,
    )
    .ok_or(GenError::InfeasibleRatio {
        index,
        lifespan_days,
        lo,
        hi,
    })?;
    let offsets = plant_gaps(lifespan_days, idle, cfg.gap_threshold_days, cfg.max_working_step, &mut rng);

    let created_secs = rng.random_range(0..86_400i64);
    let created_at = epoch() + Duration::days(rng.random_range(0..365)) + Duration::seconds(created_secs);
    let day0 = created_at - Duration::seconds(created_secs);
    let commits = offsets
        .iter()
        .map(|&off| {
            let floor = if off == 0 { created_secs } else { 0 };
            let secs = rng.random_range(floor..86_400);
            (id.clone(), day0 + Duration::days(off as i64) + Duration::seconds(secs))
        })
        .collect();

    let developers: Vec<DeveloperProfile> = followers
        .iter()
        .enumerate()
        .map(|(j, &follower_count)| DeveloperProfile {
            id: format!("{id}-dev{j}"),
            follower_count,
        })
        .collect();

    let forked_from = if cfg.project_count > 1 && rng.random_bool(cfg.fork_probability) {
        let other = (index + rng.random_range(1..cfg.project_count)) % cfg.project_count;
        Some(format!("p{other:06}"))
    } else {
        None
    };

    let project = ProjectRecord {
        id: id.clone(),
        created_at,
        deleted: rng.random_bool(cfg.deleted_probability),
        forked_from,
        language,
        file_count: features.n,
        labels: features.labels,
        core_developer_ids: developers.iter().map(|d| d.id.clone()).collect(),
        description_word_count: rng.random_range(cfg.description_word_range[0]..=cfg.description_word_range[1]),
    };

    Ok(ProjectBundle {
        project,
        commits,
        developers,
        truth: TruthRecord {
            id,
            planted_lp,
            planted_ratio: idle as f64 / lifespan_days as f64,
        },
    })
}

pub fn generate(cfg: &GenConfig) -> Result<GeneratedDataset, GenError> {
    cfg.validate()?;
    let languages: Vec<&String> = cfg.language_weights.keys().collect();
    let weights = WeightedIndex::new(cfg.language_weights.values().copied())
        .map_err(|e| GenError::InvalidConfig(e.to_string()))?;

    let bundles: Vec<Result<ProjectBundle, GenError>> = (0..cfg.project_count)
        .into_par_iter()
        .map(|i| generate_one(cfg, i, &languages, &weights))
        .collect();

    let mut out = GeneratedDataset {
        projects: Vec::with_capacity(cfg.project_count),
        commits: Vec::new(),
        developers: Vec::new(),
        truth: Vec::with_capacity(cfg.project_count),
    };
    for bundle in bundles {
        let b = bundle?;
        out.projects.push(b.project);
        out.commits.extend(b.commits);
        out.developers.extend(b.developers);
        out.truth.push(b.truth);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifespan::{non_working_ratio, GapRule};

    fn as_dates(offsets: &[u64]) -> Vec<NaiveDate> {
        let base = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        offsets.iter().map(|&o| base + Duration::days(o as i64)).collect()
    }

    #[test]
    fn zero_target_is_daily() {
        let offs = realize_timeline(100, 0.0, 6, 1).unwrap();
        assert_eq!(offs, (0..=100).collect::<Vec<u64>>());
    }

    #[test]
    fn full_target_is_one_gap() {
        assert_eq!(realize_timeline(20, 1.0, 6, 1).unwrap(), vec![0, 20]);
    }

    #[test]
    fn half_target_recomputes() {
        for seed in 0..20 {
            let offs = realize_timeline(100, 0.5, 6, seed).unwrap();
            assert_eq!((offs[0], *offs.last().unwrap()), (0, 100));
            let (_, r) = non_working_ratio(&as_dates(&offs), 100, GapRule::default()).unwrap();
            assert!((r - 0.5).abs() <= 0.02, "seed {seed}: {r}");
        }
    }

    #[test]
    fn infeasible_targets() {
        // 2..=6 idle days out of 100 cannot form a gap longer than 6
        assert!(realize_timeline(100, 0.04, 6, 0).is_err());
        assert!(realize_timeline(100, 0.05, 6, 0).is_ok());
        assert!(realize_timeline(3, 0.9, 6, 0).is_err());
        assert!(realize_timeline(0, 0.0, 6, 0).is_err());
    }

    #[test]
    fn planted_gaps_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for lifespan in [1u64, 7, 8, 30, 365] {
            for idle in [0, 7, 15, lifespan] {
                if idle != 0 && (idle < 7 || idle > lifespan) {
                    continue;
                }
                let offs = plant_gaps(lifespan, idle, 6, 4, &mut rng);
                let (d, _) = non_working_ratio(&as_dates(&offs), lifespan, GapRule::default()).unwrap();
                assert_eq!(d, idle, "lifespan {lifespan} idle {idle}");
                assert_eq!(*offs.last().unwrap(), lifespan);
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = GenConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.target_nonworking_ratio_range = [0.5, 0.99];
        assert!(cfg.validate().is_err());
        let cfg = GenConfig {
            max_working_step: 7,
            ..GenConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn infeasible_ratio_names_project() {
        let cfg = GenConfig {
            project_count: 3,
            target_nonworking_ratio_range: [0.9, 0.95],
            params: ModelParams {
                alpha: 0.001,
                ..ModelParams::reference()
            },
            label_pool: Vec::new(),
            min_planted_lifespan: 0.0,
            ..GenConfig::default()
        };
        match generate(&cfg) {
            Err(GenError::InfeasibleRatio { index, lifespan_days, .. }) => {
                assert_eq!(index, 0);
                assert_eq!(lifespan_days, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let cfg = GenConfig {
            project_count: 50,
            ..GenConfig::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = GenConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<GenConfig>(&text).unwrap(), cfg);
        let partial: GenConfig = serde_json::from_str(r#"{"seed": 7, "project_count": 5}"#).unwrap();
        assert_eq!((partial.seed, partial.project_count), (7, 5));
        assert_eq!(partial.gap_threshold_days, 6);
    }
}
