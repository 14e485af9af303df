//! Command-line pipeline: `gen`, `validate`, `filter`, `stats`,
//! `calibrate`, `predict` and `evaluate`.
//!
//! Stages exchange files only. Exit codes: 0 success, 1 I/O or internal
//! failure, 2 unreadable or malformed input, 3 dataset validation failure,
//! 4 baseline language missing, 5 nothing left to evaluate.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::domain::{FeatureVector, LifespanRecord};
use crate::features::{core_dev_count_distribution, extract_features, language_usage, FollowerAggregation};
use crate::ingest::{apply_study_filter, Dataset, StudyFilterConfig};
use crate::lifespan::{compute_lifespan, lifespan_histogram, GapRule, HistogramSpec};
use crate::model::{
    calibrate_alpha, default_thresholds, derive_label_offsets, derive_language_factors, evaluate,
    predict_lifespan, ModelError, ModelParams, DEFAULT_MAX_RATIO,
};
use crate::report::{self, ReportError};
use crate::stats::{
    binned_mean_series, label_lifespan_table, language_lifespan_table, pearson, QuantileMethod,
};
use crate::syngen::{generate, GenConfig, GenError};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_BASELINE: i32 = 4;
pub const EXIT_EMPTY_EVALUATION: i32 = 5;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "LIFESPAN_THREADS";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new(EXIT_FAILURE, format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "lifespan", version, about = "Mine, analyze and predict open-source project life-spans")]
pub struct Cli {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Projects file (JSON lines) [default: <out-dir>/projects.jsonl]
    #[arg(long, global = true, value_name = "PATH")]
    pub projects: Option<PathBuf>,
    /// Commits file (JSON lines) [default: <out-dir>/commits.jsonl]
    #[arg(long, global = true, value_name = "PATH")]
    pub commits: Option<PathBuf>,
    /// Developers file (JSON lines) [default: <out-dir>/developers.jsonl]
    #[arg(long, global = true, value_name = "PATH")]
    pub developers: Option<PathBuf>,
    /// Directory that artifacts are written to
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

impl IoArgs {
    fn projects_path(&self) -> PathBuf {
        self.projects.clone().unwrap_or_else(|| self.out_dir.join("projects.jsonl"))
    }
    fn commits_path(&self) -> PathBuf {
        self.commits.clone().unwrap_or_else(|| self.out_dir.join("commits.jsonl"))
    }
    fn developers_path(&self) -> PathBuf {
        self.developers.clone().unwrap_or_else(|| self.out_dir.join("developers.jsonl"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with a planted model
    Gen(GenArgs),
    /// Check dataset invariants and cross-references
    Validate,
    /// Apply the study selection rules and write the retained project ids
    Filter(FilterArgs),
    /// Write life-span, characteristic and correlation tables
    Stats(StatsArgs),
    /// Fit model parameters from a dataset
    Calibrate(CalibrateArgs),
    /// Predict life-spans from a feature table
    Predict(PredictArgs),
    /// Compare predictions with actual life-spans
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator config (JSON); missing keys take their defaults
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed overriding the config
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of projects overriding the config
    #[arg(long)]
    pub count: Option<usize>,
    /// Standard deviation (days) of noise on planted life-spans
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    /// Commit gaps longer than this many days count as non-working
    #[arg(long, default_value_t = 6)]
    pub gap_threshold: u32,
    /// Count a gap as `gap - 1` days instead of `gap`
    #[arg(long)]
    pub gap_exclusive: bool,
}

impl GapArgs {
    fn rule(&self) -> GapRule {
        GapRule {
            threshold_days: self.gap_threshold,
            exclusive: self.gap_exclusive,
        }
    }
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Dataset snapshot date (YYYY-MM-DD) [default: latest commit date]
    #[arg(long)]
    pub cutoff: Option<NaiveDate>,
    /// Days without commits required before the cutoff
    #[arg(long, default_value_t = StudyFilterConfig::DEFAULT_QUIESCENCE_DAYS)]
    pub quiescence_days: u32,
    /// Keep forked projects
    #[arg(long)]
    pub keep_forks: bool,
    /// Keep deleted projects
    #[arg(long)]
    pub keep_deleted: bool,
    /// Minimum life-span in days (10 selects naturally ended projects)
    #[arg(long, default_value_t = 0)]
    pub min_lifespan: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FollowerAggArg {
    Sum,
    Mean,
    Max,
}

impl From<FollowerAggArg> for FollowerAggregation {
    fn from(a: FollowerAggArg) -> Self {
        match a {
            FollowerAggArg::Sum => Self::Sum,
            FollowerAggArg::Mean => Self::Mean,
            FollowerAggArg::Max => Self::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QuantileArg {
    Linear,
    NearestRank,
}

impl From<QuantileArg> for QuantileMethod {
    fn from(q: QuantileArg) -> Self {
        match q {
            QuantileArg::Linear => Self::Linear,
            QuantileArg::NearestRank => Self::NearestRank,
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Restrict to the project ids listed in this file (one per line)
    #[arg(long, value_name = "PATH")]
    pub ids: Option<PathBuf>,
    #[command(flatten)]
    pub gap: GapArgs,
    /// Histogram upper bin edges in days, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = HistogramSpec::DEFAULT_EDGES.to_vec())]
    pub hist_edges: Vec<u64>,
    /// Bin width of the description-length series
    #[arg(long, default_value_t = 100.0)]
    pub words_bin_width: f64,
    /// Bin width of the file-count series
    #[arg(long, default_value_t = 50.0)]
    pub files_bin_width: f64,
    /// Quartile method for the language table
    #[arg(long, value_enum, default_value_t = QuantileArg::Linear)]
    pub quantile: QuantileArg,
    /// Minimum number of projects for a language row
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// How follower counts of core developers combine
    #[arg(long, value_enum, default_value_t = FollowerAggArg::Sum)]
    pub follower_agg: FollowerAggArg,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Restrict to the project ids listed in this file (one per line)
    #[arg(long, value_name = "PATH")]
    pub ids: Option<PathBuf>,
    /// Label weight written to the parameters
    #[arg(long, default_value_t = crate::reference::BETA)]
    pub beta: f64,
    /// Language whose factor is fixed to 1
    #[arg(long, default_value = crate::domain::BASELINE_LANGUAGE)]
    pub baseline: String,
    /// How follower counts of core developers combine
    #[arg(long, value_enum, default_value_t = FollowerAggArg::Sum)]
    pub follower_agg: FollowerAggArg,
    /// Output path [default: <out-dir>/params.json]
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model parameters (JSON) [default: reference parameters]
    #[arg(long, value_name = "PATH")]
    pub params: Option<PathBuf>,
    /// Feature table [default: <out-dir>/features.csv]
    #[arg(long, value_name = "PATH")]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model parameters (JSON) [default: reference parameters]
    #[arg(long, value_name = "PATH")]
    pub params: Option<PathBuf>,
    /// Restrict to the project ids listed in this file (one per line)
    #[arg(long, value_name = "PATH")]
    pub ids: Option<PathBuf>,
    #[command(flatten)]
    pub gap: GapArgs,
    /// Only projects with a non-working ratio below this are evaluated
    #[arg(long, default_value_t = DEFAULT_MAX_RATIO)]
    pub max_ratio: f64,
    /// Relative-error thresholds of the CDF, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = default_thresholds())]
    pub thresholds: Vec<f64>,
    /// How follower counts of core developers combine
    #[arg(long, value_enum, default_value_t = FollowerAggArg::Sum)]
    pub follower_agg: FollowerAggArg,
}

/// Caps the global worker pool from `LIFESPAN_THREADS`, if set.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // a pool may already exist in-process; the first setting wins
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return e.exit_code();
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(args) => cmd_gen(&cli.io, args, stdout),
        Command::Validate => cmd_validate(&cli.io, stdout),
        Command::Filter(args) => cmd_filter(&cli.io, args, stdout, stderr),
        Command::Stats(args) => cmd_stats(&cli.io, args, stdout),
        Command::Calibrate(args) => cmd_calibrate(&cli.io, args, stdout, stderr),
        Command::Predict(args) => cmd_predict(&cli.io, args, stdout, stderr),
        Command::Evaluate(args) => cmd_evaluate(&cli.io, args, stdout),
    }
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_artifact<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), ReportError>,
{
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

fn load_dataset(io: &IoArgs) -> Result<Dataset, CliError> {
    Dataset::open(&io.projects_path(), &io.commits_path(), &io.developers_path())
        .map_err(|e| CliError::new(EXIT_INPUT, e.to_string()))
}

fn validated(io: &IoArgs, ids: Option<&Path>) -> Result<Dataset, CliError> {
    let mut ds = load_dataset(io)?;
    let report = ds.validate();
    if !report.is_clean() {
        let mut msg = format!("dataset failed validation with {} violation(s)", report.violations.len());
        for v in report.violations.iter().take(20) {
            msg.push_str(&format!("\n  {v}"));
        }
        return Err(CliError::new(EXIT_VALIDATION, msg));
    }
    if let Some(path) = ids {
        ds.restrict_to(&read_ids(path)?);
    }
    Ok(ds)
}

fn read_ids(path: &Path) -> Result<HashSet<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn load_params(path: Option<&Path>) -> Result<ModelParams, CliError> {
    let Some(path) = path else {
        return Ok(ModelParams::reference());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    ModelParams::from_json(&text).map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn lifespans(ds: &Dataset, rule: GapRule) -> Vec<LifespanRecord> {
    ds.projects
        .par_iter()
        .map(|p| compute_lifespan(p, ds.timeline(&p.id), rule))
        .collect()
}

fn feature_vectors(ds: &Dataset, agg: FollowerAggregation) -> Result<Vec<FeatureVector>, CliError> {
    ds.projects
        .par_iter()
        .map(|p| extract_features(p, &ds.developers, agg))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::new(EXIT_VALIDATION, e.to_string()))
}

fn cmd_gen(io: &IoArgs, args: &GenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
            serde_json::from_str::<GenConfig>(&text)
                .map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?
        }
        None => GenConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(count) = args.count {
        cfg.project_count = count;
    }
    if let Some(sd) = args.noise_sd {
        cfg.noise_sd = sd;
    }
    let data = generate(&cfg).map_err(|e| match e {
        GenError::InvalidConfig(_) => CliError::new(EXIT_INPUT, e.to_string()),
        _ => CliError::new(EXIT_FAILURE, e.to_string()),
    })?;

    create_out_dir(&io.out_dir)?;
    let projects = io.projects_path();
    let commits = io.commits_path();
    let developers = io.developers_path();
    write_artifact(&projects, |w| Ok(crate::ingest::write_projects(w, &data.projects)?))?;
    write_artifact(&commits, |w| Ok(crate::ingest::write_commits(w, &data.commits)?))?;
    write_artifact(&developers, |w| Ok(crate::ingest::write_developers(w, &data.developers)?))?;
    write_artifact(&io.out_dir.join("truth.jsonl"), |w| Ok(data.write_truth(w)?))?;
    write_artifact(&io.out_dir.join("planted_params.json"), |w| {
        report::write_json(w, &cfg.params)
    })?;
    let _ = writeln!(
        stdout,
        "generated {} projects, {} commits, {} developers (seed {})",
        data.projects.len(),
        data.commits.len(),
        data.developers.len(),
        cfg.seed
    );
    Ok(())
}

fn cmd_validate(io: &IoArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ds = validated(io, None)?;
    let _ = writeln!(
        stdout,
        "ok: {} projects, {} timelines, {} developers",
        ds.projects.len(),
        ds.timelines.len(),
        ds.developers.len()
    );
    Ok(())
}

fn cmd_filter(io: &IoArgs, args: &FilterArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let ds = validated(io, None)?;
    let cutoff = args
        .cutoff
        .or_else(|| ds.timelines.values().filter_map(|t| t.last()).max())
        .or_else(|| ds.projects.iter().map(|p| p.born()).max())
        .unwrap_or_default();
    let cfg = StudyFilterConfig {
        cutoff,
        quiescence_days: args.quiescence_days,
        exclude_forks: !args.keep_forks,
        exclude_deleted: !args.keep_deleted,
        min_lifespan_days: args.min_lifespan,
    };
    let outcome = apply_study_filter(&ds.projects, &ds.timelines, &cfg);
    for w in &outcome.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }

    create_out_dir(&io.out_dir)?;
    write_artifact(&io.out_dir.join("filtered_ids.txt"), |w| {
        for p in &outcome.kept {
            writeln!(w, "{}", p.id)?;
        }
        Ok(())
    })?;
    let summary = json!({
        "cutoff": cutoff.to_string(),
        "quiescence_days": cfg.quiescence_days,
        "total": outcome.total,
        "kept": outcome.kept.len(),
        "dropped": outcome.dropped(),
        "rules": outcome.rules,
    });
    write_artifact(&io.out_dir.join("filter_summary.json"), |w| report::write_json(w, &summary))?;

    let mut line = format!(
        "kept {} dropped {} of {} (cutoff {cutoff})",
        outcome.kept.len(),
        outcome.dropped(),
        outcome.total
    );
    for t in &outcome.rules {
        line.push_str(&format!("; {}: kept {} dropped {}", t.rule.name(), t.kept, t.dropped));
    }
    let _ = writeln!(stdout, "{line}");
    Ok(())
}

fn correlation_entry(x: &[f64], y: &[f64]) -> Value {
    match pearson(x, y) {
        Ok(r) => json!({ "r": r, "n": x.len() }),
        Err(e) => json!({ "r": "undefined", "n": x.len(), "reason": e.to_string() }),
    }
}

fn correlation_summary(features: &[FeatureVector], days: &[f64]) -> Value {
    let files: Vec<f64> = features.iter().map(|f| f.n as f64).collect();
    let devs: Vec<f64> = features.iter().map(|f| f.core_dev_count as f64).collect();

    let mut by_language: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (f, d) in features.iter().zip(days) {
        if !f.language.is_empty() {
            let e = by_language.entry(f.language.as_str()).or_default();
            e.0.push(f.m);
            e.1.push(*d);
        }
    }
    let followers: serde_json::Map<String, Value> = by_language
        .iter()
        .map(|(lang, (m, d))| (lang.to_string(), correlation_entry(m, d)))
        .collect();

    let bands: [(&str, u64, u64); 3] = [("0-500", 0, 500), ("500-1000", 500, 1000), ("1000+", 1000, u64::MAX)];
    let description: serde_json::Map<String, Value> = bands
        .iter()
        .map(|&(name, lo, hi)| {
            let (x, y): (Vec<f64>, Vec<f64>) = features
                .iter()
                .zip(days)
                .filter(|(f, _)| (lo..hi).contains(&f.description_word_count))
                .map(|(f, d)| (f.description_word_count as f64, *d))
                .unzip();
            (name.to_string(), correlation_entry(&x, &y))
        })
        .collect();

    json!({
        "file_number": correlation_entry(&files, days),
        "core_developers": correlation_entry(&devs, days),
        "followers_by_language": followers,
        "description_words_by_band": description,
    })
}

fn invalid_arg(e: impl std::fmt::Display) -> CliError {
    CliError::new(EXIT_INPUT, e.to_string())
}

fn cmd_stats(io: &IoArgs, args: &StatsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let hist = HistogramSpec::new(args.hist_edges.clone()).map_err(invalid_arg)?;
    let ds = validated(io, args.ids.as_deref())?;
    let records = lifespans(&ds, args.gap.rule());
    let features = feature_vectors(&ds, args.follower_agg.into())?;
    let days: Vec<f64> = records.iter().map(|r| r.days as f64).collect();

    let language_pairs: Vec<(String, f64)> = features.iter().zip(&days).map(|(f, d)| (f.language.clone(), *d)).collect();
    let language_rows =
        language_lifespan_table(&language_pairs, args.min_count, args.quantile.into()).map_err(invalid_arg)?;
    let label_pairs: Vec<(BTreeSet<String>, f64)> = features.iter().zip(&days).map(|(f, d)| (f.labels.clone(), *d)).collect();
    let label_rows = label_lifespan_table(&label_pairs).map_err(invalid_arg)?;

    let words: Vec<f64> = features.iter().map(|f| f.description_word_count as f64).collect();
    let files: Vec<f64> = features.iter().map(|f| f.n as f64).collect();
    let words_series = binned_mean_series(&words, &days, args.words_bin_width).map_err(invalid_arg)?;
    let files_series = binned_mean_series(&files, &days, args.files_bin_width).map_err(invalid_arg)?;

    let out = &io.out_dir;
    create_out_dir(out)?;
    write_artifact(&out.join("lifespans.csv"), |w| report::write_lifespans(w, &records))?;
    write_artifact(&out.join("histogram.csv"), |w| {
        report::write_histogram(w, &lifespan_histogram(&records, &hist))
    })?;
    write_artifact(&out.join("features.csv"), |w| report::write_features(w, &features))?;
    write_artifact(&out.join("language_table.csv"), |w| report::write_language_table(w, &language_rows))?;
    write_artifact(&out.join("language_table.json"), |w| report::write_json(w, &language_rows))?;
    write_artifact(&out.join("label_table.csv"), |w| report::write_label_table(w, &label_rows))?;
    write_artifact(&out.join("label_table.json"), |w| report::write_json(w, &label_rows))?;
    write_artifact(&out.join("core_developers.csv"), |w| {
        report::write_core_dev_distribution(w, &core_dev_count_distribution(&ds.projects))
    })?;
    write_artifact(&out.join("language_usage.csv"), |w| {
        report::write_language_usage(w, &language_usage(&ds.projects))
    })?;
    write_artifact(&out.join("description_series.tsv"), |w| {
        report::write_series_tsv(w, "description_words", &words_series)
    })?;
    write_artifact(&out.join("file_series.tsv"), |w| report::write_series_tsv(w, "file_count", &files_series))?;
    write_artifact(&out.join("correlations.json"), |w| {
        report::write_json(w, &correlation_summary(&features, &days))
    })?;

    let _ = writeln!(
        stdout,
        "stats over {} projects: {} languages, {} labels",
        records.len(),
        language_rows.len(),
        label_rows.len()
    );
    Ok(())
}

fn cmd_calibrate(io: &IoArgs, args: &CalibrateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let ds = validated(io, args.ids.as_deref())?;
    if ds.projects.is_empty() {
        return Err(CliError::new(EXIT_INPUT, "no projects to calibrate from"));
    }
    let records = lifespans(&ds, GapRule::default());
    let features = feature_vectors(&ds, args.follower_agg.into())?;
    let days: Vec<f64> = records.iter().map(|r| r.days as f64).collect();

    let pairs: Vec<(FeatureVector, f64)> = features.iter().cloned().zip(days.iter().copied()).collect();
    let alpha = calibrate_alpha(&pairs).map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
    let global_mean = days.iter().sum::<f64>() / days.len() as f64;

    let language_pairs: Vec<(String, f64)> = features.iter().zip(&days).map(|(f, d)| (f.language.clone(), *d)).collect();
    let language_rows = language_lifespan_table(&language_pairs, 1, QuantileMethod::Linear).map_err(invalid_arg)?;
    let mut language_factors = derive_language_factors(&language_rows, &args.baseline).map_err(|e| match e {
        ModelError::MissingBaseline(_) | ModelError::NonPositiveBaseline(_) => CliError::new(EXIT_BASELINE, e.to_string()),
        _ => CliError::new(EXIT_FAILURE, e.to_string()),
    })?;
    language_factors.retain(|lang, factor| {
        let keep = *factor > 0.0;
        if !keep {
            let _ = writeln!(stderr, "warning: language {lang} has zero average life-span; left out of the factors");
        }
        keep
    });

    let label_pairs: Vec<(BTreeSet<String>, f64)> = features.iter().zip(&days).map(|(f, d)| (f.labels.clone(), *d)).collect();
    let label_rows = label_lifespan_table(&label_pairs).map_err(invalid_arg)?;
    let label_offsets = derive_label_offsets(&label_rows, global_mean).map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;

    let params = ModelParams {
        alpha,
        beta: args.beta,
        baseline: args.baseline.clone(),
        language_factors,
        label_offsets,
        global_mean_lifespan: global_mean,
    };
    params.validate().map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;

    create_out_dir(&io.out_dir)?;
    let path = args.output.clone().unwrap_or_else(|| io.out_dir.join("params.json"));
    write_artifact(&path, |w| report::write_json(w, &params))?;
    let _ = writeln!(
        stdout,
        "alpha {} beta {} global mean {} over {} projects",
        report::fmt4(params.alpha),
        report::fmt4(params.beta),
        report::fmt4(params.global_mean_lifespan),
        records.len()
    );
    Ok(())
}

fn cmd_predict(io: &IoArgs, args: &PredictArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let params = load_params(args.params.as_deref())?;
    let path = args.features.clone().unwrap_or_else(|| io.out_dir.join("features.csv"));
    let file = File::open(&path).map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    let features = report::read_features(std::io::BufReader::new(file))
        .map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;

    let predictions: Vec<(String, crate::model::Prediction)> = features
        .par_iter()
        .map(|f| (f.project_id.clone(), predict_lifespan(f, &params)))
        .collect();

    let mut unknown_languages = BTreeSet::new();
    let mut unknown_labels = BTreeSet::new();
    for ((_, p), f) in predictions.iter().zip(&features) {
        if p.unknown_language {
            unknown_languages.insert(f.language.clone());
        }
        unknown_labels.extend(p.unknown_labels.iter().cloned());
    }
    for lang in &unknown_languages {
        let _ = writeln!(stderr, "warning: unknown language {lang}; using factor 1.0");
    }
    for label in &unknown_labels {
        let _ = writeln!(stderr, "warning: unknown label {label}; using offset 0");
    }

    create_out_dir(&io.out_dir)?;
    write_artifact(&io.out_dir.join("predictions.csv"), |w| report::write_predictions(w, &predictions))?;
    let _ = writeln!(stdout, "predicted {} projects", predictions.len());
    Ok(())
}

fn cmd_evaluate(io: &IoArgs, args: &EvaluateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = load_params(args.params.as_deref())?;
    let ds = validated(io, args.ids.as_deref())?;
    let records = lifespans(&ds, args.gap.rule());
    let features = feature_vectors(&ds, args.follower_agg.into())?;
    let dataset: Vec<(FeatureVector, LifespanRecord)> = features.into_iter().zip(records).collect();

    let report = evaluate(&dataset, &params, args.max_ratio, &args.thresholds).map_err(|e| match e {
        ModelError::NoProjectsPassFilter => CliError::new(EXIT_EMPTY_EVALUATION, e.to_string()),
        ModelError::ZeroActualLifespan(_) => CliError::new(
            EXIT_VALIDATION,
            format!("{e} (filter with --min-lifespan 1 first)"),
        ),
        ModelError::InvalidThreshold(_) => CliError::new(EXIT_INPUT, e.to_string()),
        _ => CliError::new(EXIT_FAILURE, e.to_string()),
    })?;

    create_out_dir(&io.out_dir)?;
    write_artifact(&io.out_dir.join("evaluation.csv"), |w| report::write_evaluation(w, &report))?;
    let cdf = json!({
        "max_ratio": args.max_ratio,
        "evaluated": report.rows.len(),
        "excluded": report.excluded,
        "cdf_points": report.cdf_points,
    });
    write_artifact(&io.out_dir.join("cdf.json"), |w| report::write_json(w, &cdf))?;

    let _ = writeln!(
        stdout,
        "evaluated {} projects ({} excluded by non-working ratio >= {})",
        report.rows.len(),
        report.excluded,
        args.max_ratio
    );
    for t in [0.1, 0.3] {
        let _ = writeln!(stdout, "fraction below {t}: {:.2}", report.fraction_within(t));
    }
    Ok(())
}
