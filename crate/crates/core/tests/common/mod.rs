#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_lifespan"))
}

/// Runs the CLI with `--out-dir dir` prepended to `args`.
pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn lifespan")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Hand-written project: one core developer, one commit `days` after creation.
pub struct Spec<'a> {
    pub id: String,
    pub language: &'a str,
    pub file_count: u64,
    pub days: i64,
    pub followers: u64,
    pub labels: Vec<&'a str>,
}

/// Writes projects, commits and developers for `specs`, all created on
/// 2012-01-01 at noon UTC.
pub fn write_specs(dir: &Path, specs: &[Spec]) {
    let born = chrono::NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
    let mut projects = String::new();
    let mut commits = String::new();
    let mut developers = String::new();
    for s in specs {
        let dev = format!("{}-owner", s.id);
        let project = serde_json::json!({
            "id": s.id,
            "created_at": "2012-01-01T12:00:00Z",
            "deleted": false,
            "forked_from": null,
            "language": s.language,
            "file_count": s.file_count,
            "labels": s.labels,
            "core_developers": [dev],
            "description_word_count": 10,
        });
        projects.push_str(&format!("{project}\n"));
        for offset in [0, s.days] {
            let day = born + chrono::Days::new(offset as u64);
            commits.push_str(&format!(
                "{{\"project_id\":\"{}\",\"committed_at\":\"{day}T13:00:00Z\"}}\n",
                s.id
            ));
        }
        developers.push_str(&format!("{{\"id\":\"{dev}\",\"followers\":{}}}\n", s.followers));
    }
    fs::write(dir.join("projects.jsonl"), projects).unwrap();
    fs::write(dir.join("commits.jsonl"), commits).unwrap();
    fs::write(dir.join("developers.jsonl"), developers).unwrap();
}

/// Projects whose life-span is exactly twice their file count.
pub fn twice_file_count_specs(count: u64) -> Vec<Spec<'static>> {
    (1..=count)
        .map(|i| {
            let n = 3 + 7 * i;
            Spec {
                id: format!("q{i:04}"),
                language: ["Java", "C", "Ruby"][(i % 3) as usize],
                file_count: n,
                days: 2 * n as i64,
                followers: i,
                labels: vec![],
            }
        })
        .collect()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}
