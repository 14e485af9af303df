use std::ffi::{CStr, CString};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lifespan_core::lifespan::{compute_lifespan, GapRule};
use lifespan_core::syngen::{generate, GenConfig};
use lifespan_ffi::*;

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn write_dataset(dir: &Path, count: usize) -> GenConfig {
    let cfg = GenConfig {
        seed: 7,
        project_count: count,
        noise_sd: 0.0,
        ..GenConfig::default()
    };
    let data = generate(&cfg).unwrap();
    let open = |name: &str| File::create(dir.join(name)).unwrap();
    data.write_all(open("projects.jsonl"), open("commits.jsonl"), open("developers.jsonl"), open("truth.jsonl"))
        .unwrap();
    cfg
}

fn load(dir: &Path) -> *mut LsDataset {
    let mut ds = ptr::null_mut();
    let st = unsafe {
        ls_dataset_load(
            cstr(&dir.join("projects.jsonl")).as_ptr(),
            cstr(&dir.join("commits.jsonl")).as_ptr(),
            cstr(&dir.join("developers.jsonl")).as_ptr(),
            &mut ds,
        )
    };
    assert_eq!(st, LsStatus::Ok);
    assert!(!ds.is_null());
    ds
}

#[test]
fn dataset_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_dataset(dir.path(), 200);
    let ds = load(dir.path());

    let mut len = 0;
    assert_eq!(unsafe { ls_dataset_len(ds, &mut len) }, LsStatus::Ok);
    assert_eq!(len, 200);
    let mut violations = usize::MAX;
    assert_eq!(unsafe { ls_dataset_validate(ds, &mut violations) }, LsStatus::Ok);
    assert_eq!(violations, 0);

    let data = generate(&cfg).unwrap();
    let timelines = data.timelines();
    for p in data.projects.iter().take(20) {
        let expected = compute_lifespan(p, timelines.get(&p.id), GapRule::default());
        let mut got = LsLifespan::default();
        let id = CString::new(p.id.as_str()).unwrap();
        assert_eq!(unsafe { ls_dataset_project_lifespan(ds, id.as_ptr(), 6, false, &mut got) }, LsStatus::Ok);
        assert_eq!(got.days, expected.days);
        assert_eq!(got.non_working_days, expected.non_working_days);
        assert_eq!(got.non_working_ratio, expected.non_working_ratio);
    }

    let missing = CString::new("nope").unwrap();
    let mut got = LsLifespan::default();
    assert_eq!(
        unsafe { ls_dataset_project_lifespan(ds, missing.as_ptr(), 6, false, &mut got) },
        LsStatus::NotFound
    );

    let json = CString::new(cfg.params.to_json()).unwrap();
    let mut params = ptr::null_mut();
    assert_eq!(unsafe { ls_params_from_json(json.as_ptr(), &mut params) }, LsStatus::Ok);
    let mut eval = LsEvaluation::default();
    assert_eq!(unsafe { ls_evaluate(ds, params, 0.3, 0.1, &mut eval) }, LsStatus::Ok);
    assert_eq!(eval.evaluated + eval.excluded, 200);
    assert_eq!(eval.fraction_within, 1.0);

    let mut none = LsEvaluation::default();
    assert_eq!(unsafe { ls_evaluate(ds, params, 0.0, 0.1, &mut none) }, LsStatus::EmptyEvaluation);

    unsafe {
        ls_params_free(params);
        ls_dataset_free(ds);
    }
}

#[test]
fn load_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cstr(&dir.path().join("absent.jsonl"));
    let mut ds = ptr::null_mut();
    let st = unsafe { ls_dataset_load(missing.as_ptr(), missing.as_ptr(), missing.as_ptr(), &mut ds) };
    assert_eq!(st, LsStatus::Io);
    assert!(ds.is_null());
    let msg = unsafe { CStr::from_ptr(ls_last_error()) }.to_string_lossy().into_owned();
    assert!(msg.contains("absent.jsonl"), "{msg}");

    std::fs::write(dir.path().join("bad.jsonl"), "{not json\n").unwrap();
    let bad = cstr(&dir.path().join("bad.jsonl"));
    let st = unsafe { ls_dataset_load(bad.as_ptr(), bad.as_ptr(), bad.as_ptr(), &mut ds) };
    assert_eq!(st, LsStatus::Parse);
}

#[test]
fn params_json_survives_the_boundary() {
    let mut params = ptr::null_mut();
    assert_eq!(unsafe { ls_params_reference(&mut params) }, LsStatus::Ok);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { ls_params_to_json(params, &mut text) }, LsStatus::Ok);
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { ls_params_from_json(text, &mut again) }, LsStatus::Ok);

    let lang = CString::new("C#").unwrap();
    let maps = CString::new("Maps").unwrap();
    let labels = [maps.as_ptr()];
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(ls_predict(params, 1024, lang.as_ptr(), 256.0, labels.as_ptr(), 1, &mut a), LsStatus::Ok);
        assert_eq!(ls_predict(again, 1024, lang.as_ptr(), 256.0, labels.as_ptr(), 1, &mut b), LsStatus::Ok);
        ls_string_free(text);
        ls_params_free(params);
        ls_params_free(again);
    }
    assert_eq!(a, b);

    let garbage = CString::new("{\"alpha\": ").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ls_params_from_json(garbage.as_ptr(), &mut p) }, LsStatus::Parse);
    assert!(p.is_null());
}

#[test]
fn numeric_entry_points() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [2.0, 4.0, 6.0, 8.0];
    let mut r = 0.0;
    assert_eq!(unsafe { ls_pearson(x.as_ptr(), y.as_ptr(), 4, &mut r) }, LsStatus::Ok);
    assert!((r - 1.0).abs() < 1e-12);
    let flat = [3.0; 4];
    assert_eq!(unsafe { ls_pearson(x.as_ptr(), flat.as_ptr(), 4, &mut r) }, LsStatus::Undefined);

    let days = [0i64, 7, 14];
    let (mut d, mut ratio) = (0, 0.0);
    assert_eq!(
        unsafe { ls_non_working_ratio(days.as_ptr(), 3, 14, 6, false, &mut d, &mut ratio) },
        LsStatus::Ok
    );
    assert_eq!((d, ratio), (14, 1.0));
    assert_eq!(
        unsafe { ls_non_working_ratio(days.as_ptr(), 3, 13, 6, false, &mut d, &mut ratio) },
        LsStatus::InvalidArgument
    );
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml");
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "--manifest-path"])
        .arg(&manifest)
        .status()
        .unwrap();
    assert!(built.success(), "building the static library failed");
    let lib = target_dir().join("liblifespan_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <math.h>
#include "lifespan.h"

int main(void) {
    LsParams *params = NULL;
    if (ls_params_reference(&params) != LS_STATUS_OK) return 1;
    double lp = 0.0;
    const char *labels[] = {"Maps"};
    if (ls_predict(params, 1024, "Java", 256.0, labels, 1, &lp) != LS_STATUS_OK) return 2;
    if (fabs(lp - 114.80) > 1e-9) return 3;
    if (ls_predict(NULL, 1024, "Java", 256.0, NULL, 0, &lp) != LS_STATUS_NULL_POINTER) return 4;
    if (ls_last_error() == NULL) return 5;
    ls_params_free(params);
    printf("%.2f\n", lp);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "114.80");
}
