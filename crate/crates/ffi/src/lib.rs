//! C ABI over `lifespan-core`.
//!
//! Every function returns an [`LsStatus`]; results go through out-pointers.
//! Datasets and parameter sets are opaque handles released with their
//! `*_free` function. Strings handed out by the library are released with
//! [`ls_string_free`]. After a failing call, [`ls_last_error`] describes the
//! failure on the calling thread.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chrono::{Days, NaiveDate};
use lifespan_core::features::{extract_features, FollowerAggregation};
use lifespan_core::ingest::Dataset;
use lifespan_core::lifespan::{compute_lifespan, non_working_ratio, GapRule};
use lifespan_core::model::{evaluate, predict_lifespan, ModelError};
use lifespan_core::{FeatureVector, ModelParams};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    NotFound = 6,
    InvalidArgument = 7,
    EmptyEvaluation = 8,
    Undefined = 9,
    Panic = 10,
}

/// Loaded dataset.
pub struct LsDataset {
    inner: Dataset,
}

/// Model parameters.
pub struct LsParams {
    inner: ModelParams,
}

/// Life-span of one project.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LsLifespan {
    pub days: u64,
    pub non_working_days: u64,
    pub non_working_ratio: f64,
}

/// Evaluation summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LsEvaluation {
    pub evaluated: usize,
    pub excluded: usize,
    /// Share of evaluated projects with relative error at or below the threshold.
    pub fraction_within: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LsStatus, String);

impl Failure {
    fn new(status: LsStatus, msg: impl std::fmt::Display) -> Self {
        Self(status, msg.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(LsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(LsStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(LsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(LsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(LsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn model_failure(e: ModelError) -> Failure {
    let status = match e {
        ModelError::NoProjectsPassFilter => LsStatus::EmptyEvaluation,
        ModelError::ZeroActualLifespan(_) => LsStatus::Validation,
        ModelError::Json(_) => LsStatus::Parse,
        _ => LsStatus::InvalidArgument,
    };
    Failure::new(status, e)
}

/// Message describing the last failure on this thread, or null.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads projects, commits and developers from JSON-lines files.
///
/// # Safety
/// Path arguments must be null-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_load(
    projects_path: *const c_char,
    commits_path: *const c_char,
    developers_path: *const c_char,
    out: *mut *mut LsDataset,
) -> LsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let projects = str_arg(projects_path, "projects_path")?;
        let commits = str_arg(commits_path, "commits_path")?;
        let developers = str_arg(developers_path, "developers_path")?;
        let inner = Dataset::open(Path::new(projects), Path::new(commits), Path::new(developers)).map_err(|e| {
            let status = match e.source {
                lifespan_core::ingest::IngestError::Io(_) => LsStatus::Io,
                _ => LsStatus::Parse,
            };
            Failure::new(status, e)
        })?;
        *out = Box::into_raw(Box::new(LsDataset { inner }));
        Ok(())
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `ds` must be null or a handle from [`ls_dataset_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_free(ds: *mut LsDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of projects in the dataset.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_len(ds: *const LsDataset, out: *mut usize) -> LsStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        *out_arg(out, "out")? = ds.inner.projects.len();
        Ok(())
    })
}

/// Checks dataset invariants. Writes the violation count; returns
/// `Validation` (with the first violation as message) when it is non-zero.
///
/// # Safety
/// `ds` must be a live handle; `violations` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_validate(ds: *const LsDataset, violations: *mut usize) -> LsStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        let out = out_arg(violations, "violations")?;
        let report = ds.inner.validate();
        *out = report.violations.len();
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(Failure::new(
                LsStatus::Validation,
                format!("{} violation(s), first: {v}", report.violations.len()),
            )),
        }
    })
}

/// Life-span and non-working ratio of one project.
///
/// # Safety
/// `ds` must be a live handle, `project_id` a null-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_dataset_project_lifespan(
    ds: *const LsDataset,
    project_id: *const c_char,
    gap_threshold_days: u32,
    exclusive: bool,
    out: *mut LsLifespan,
) -> LsStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        let id = str_arg(project_id, "project_id")?;
        let out = out_arg(out, "out")?;
        let project = ds
            .inner
            .projects
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Failure::new(LsStatus::NotFound, format!("unknown project {id}")))?;
        let rule = GapRule {
            threshold_days: gap_threshold_days,
            exclusive,
        };
        let rec = compute_lifespan(project, ds.inner.timeline(id), rule);
        *out = LsLifespan {
            days: rec.days,
            non_working_days: rec.non_working_days,
            non_working_ratio: rec.non_working_ratio,
        };
        Ok(())
    })
}

/// Built-in reference parameters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_params_reference(out: *mut *mut LsParams) -> LsStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(LsParams {
            inner: ModelParams::reference(),
        }));
        Ok(())
    })
}

/// Parses and validates parameters from JSON.
///
/// # Safety
/// `json` must be a null-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_params_from_json(json: *const c_char, out: *mut *mut LsParams) -> LsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let inner = ModelParams::from_json(text).map_err(model_failure)?;
        *out = Box::into_raw(Box::new(LsParams { inner }));
        Ok(())
    })
}

/// Serializes parameters to JSON. Free the result with [`ls_string_free`].
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_params_to_json(params: *const LsParams, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        let params = ref_arg(params, "params")?;
        let out = out_arg(out, "out")?;
        let text = CString::new(params.inner.to_json()).map_err(|e| Failure::new(LsStatus::InvalidArgument, e))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// Releases parameters. Null is ignored.
///
/// # Safety
/// `params` must be null or a live handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_params_free(params: *mut LsParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Predicted life-span in days for one project description.
///
/// # Safety
/// `params` must be a live handle, `language` a null-terminated string,
/// `labels` an array of `label_count` null-terminated strings (may be null
/// when `label_count` is 0) and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ls_predict(
    params: *const LsParams,
    file_count: u64,
    language: *const c_char,
    follower_count: f64,
    labels: *const *const c_char,
    label_count: usize,
    out: *mut f64,
) -> LsStatus {
    guard(|| {
        let params = ref_arg(params, "params")?;
        let language = str_arg(language, "language")?;
        let out = out_arg(out, "out")?;
        if !(follower_count.is_finite() && follower_count >= 0.0) {
            return Err(Failure::new(
                LsStatus::InvalidArgument,
                format!("follower count must be finite and >= 0, got {follower_count}"),
            ));
        }
        let labels = slice_arg(labels, label_count, "labels")?
            .iter()
            .map(|&l| str_arg(l, "label").map(str::to_string))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let features = FeatureVector {
            project_id: String::new(),
            n: file_count,
            language: lifespan_core::domain::normalize_language(language),
            m: follower_count,
            labels,
            core_dev_count: 1,
            description_word_count: 0,
        };
        *out = predict_lifespan(&features, &params.inner).lp;
        Ok(())
    })
}

/// Non-working days and ratio of a commit history given as day numbers
/// (days since 1970-01-01, any order, duplicates allowed).
///
/// # Safety
/// `commit_days` must point to `len` values (may be null when `len` is 0);
/// output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_non_working_ratio(
    commit_days: *const i64,
    len: usize,
    lifespan_days: u64,
    gap_threshold_days: u32,
    exclusive: bool,
    out_days: *mut u64,
    out_ratio: *mut f64,
) -> LsStatus {
    guard(|| {
        let raw = slice_arg(commit_days, len, "commit_days")?;
        let out_days = out_arg(out_days, "out_days")?;
        let out_ratio = out_arg(out_ratio, "out_ratio")?;
        let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
        let mut dates = raw
            .iter()
            .map(|&d| {
                let shifted = if d >= 0 {
                    epoch.checked_add_days(Days::new(d as u64))
                } else {
                    epoch.checked_sub_days(Days::new(d.unsigned_abs()))
                };
                shifted.ok_or_else(|| Failure::new(LsStatus::InvalidArgument, format!("day {d} out of range")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        dates.sort_unstable();
        dates.dedup();
        let rule = GapRule {
            threshold_days: gap_threshold_days,
            exclusive,
        };
        let (days, ratio) =
            non_working_ratio(&dates, lifespan_days, rule).map_err(|e| Failure::new(LsStatus::InvalidArgument, e))?;
        *out_days = days;
        *out_ratio = ratio;
        Ok(())
    })
}

/// Evaluates predictions against actual life-spans over the whole dataset.
///
/// # Safety
/// `ds` and `params` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_evaluate(
    ds: *const LsDataset,
    params: *const LsParams,
    max_ratio: f64,
    threshold: f64,
    out: *mut LsEvaluation,
) -> LsStatus {
    guard(|| {
        let ds = &ref_arg(ds, "dataset")?.inner;
        let params = &ref_arg(params, "params")?.inner;
        let out = out_arg(out, "out")?;
        let rule = GapRule::default();
        let rows = ds
            .projects
            .iter()
            .map(|p| {
                let f = extract_features(p, &ds.developers, FollowerAggregation::Sum)
                    .map_err(|e| Failure::new(LsStatus::Validation, e))?;
                Ok((f, compute_lifespan(p, ds.timeline(&p.id), rule)))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let report = evaluate(&rows, params, max_ratio, &[threshold]).map_err(model_failure)?;
        *out = LsEvaluation {
            evaluated: report.rows.len(),
            excluded: report.excluded,
            fraction_within: report.fraction_within(threshold),
        };
        Ok(())
    })
}

/// Sample Pearson correlation of two equally long series.
/// Returns `Undefined` when a series is constant or too short.
///
/// # Safety
/// `x` and `y` must each point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ls_pearson(x: *const f64, y: *const f64, len: usize, out: *mut f64) -> LsStatus {
    guard(|| {
        let x = slice_arg(x, len, "x")?;
        let y = slice_arg(y, len, "y")?;
        let out = out_arg(out, "out")?;
        *out = lifespan_core::stats::pearson(x, y).map_err(|e| {
            let status = match e {
                lifespan_core::stats::StatsError::UndefinedCorrelation(_) => LsStatus::Undefined,
                _ => LsStatus::InvalidArgument,
            };
            Failure::new(status, e)
        })?;
        Ok(())
    })
}
