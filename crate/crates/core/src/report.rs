//! CSV, TSV and JSON artifacts. Reals are written with four decimals.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::domain::{FeatureVector, LifespanRecord};
use crate::model::{EvaluationReport, Prediction};
use crate::stats::{BinnedPoint, LabelStatsRow, LanguageStatsRow};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
}

pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

pub const LABEL_SEPARATOR: char = '|';

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_lifespans<W: Write>(w: W, records: &[LifespanRecord]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(["project_id", "born", "died", "days", "nonworking_days", "ratio"])?;
    for r in records {
        out.write_record([
            r.project_id.clone(),
            r.born.to_string(),
            r.died.to_string(),
            r.days.to_string(),
            r.non_working_days.to_string(),
            fmt4(r.non_working_ratio),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(w: W, bins: &[(String, u64)]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(["bin", "count"])?;
    for (label, count) in bins {
        out.write_record([label.clone(), count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

const FEATURE_HEADER: [&str; 7] = [
    "project_id",
    "n",
    "language",
    "m",
    "core_dev_count",
    "labels",
    "description_words",
];

pub fn write_features<W: Write>(w: W, features: &[FeatureVector]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(FEATURE_HEADER)?;
    for f in features {
        let labels: Vec<&str> = f.labels.iter().map(String::as_str).collect();
        out.write_record([
            f.project_id.clone(),
            f.n.to_string(),
            f.language.clone(),
            fmt4(f.m),
            f.core_dev_count.to_string(),
            labels.join(&LABEL_SEPARATOR.to_string()),
            f.description_word_count.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_features<R: Read>(r: R) -> Result<Vec<FeatureVector>, ReportError> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(FEATURE_HEADER) {
        return Err(ReportError::BadRow {
            row: 1,
            reason: format!("expected header {}", FEATURE_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let bad = |field: &str, value: &str| ReportError::BadRow {
            row,
            reason: format!("invalid {field} `{value}`"),
        };
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let n = field(1).parse::<u64>().map_err(|_| bad("n", field(1)))?;
        let m = field(3)
            .parse::<f64>()
            .ok()
            .filter(|m| m.is_finite() && *m >= 0.0)
            .ok_or_else(|| bad("m", field(3)))?;
        let core_dev_count = field(4)
            .parse::<usize>()
            .ok()
            .filter(|c| *c >= 1)
            .ok_or_else(|| bad("core_dev_count", field(4)))?;
        let description_word_count = field(6).parse::<u64>().map_err(|_| bad("description_words", field(6)))?;
        let labels: BTreeSet<String> = field(5)
            .split(LABEL_SEPARATOR)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        out.push(FeatureVector {
            project_id: field(0).to_string(),
            n,
            language: field(2).to_string(),
            m,
            labels,
            core_dev_count,
            description_word_count,
        });
    }
    Ok(out)
}

pub fn write_language_table<W: Write>(w: W, rows: &[LanguageStatsRow]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(["language", "average", "q1", "median", "q3", "count"])?;
    for r in rows {
        out.write_record([
            r.language.clone(),
            fmt4(r.average),
            fmt4(r.q1),
            fmt4(r.median),
            fmt4(r.q3),
            r.count.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_label_table<W: Write>(w: W, rows: &[LabelStatsRow]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(["label", "average", "count"])?;
    for r in rows {
        out.write_record([r.label.clone(), fmt4(r.average), r.count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_core_dev_distribution<W: Write>(w: W, tally: &[(usize, usize)]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(["core_developers", "projects"])?;
    for (devs, projects) in tally {
        out.write_record([devs.to_string(), projects.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_language_usage<W: Write>(w: W, shares: &[(String, f64)]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(["language", "share"])?;
    for (language, share) in shares {
        out.write_record([language.clone(), fmt4(*share)])?;
    }
    out.flush()?;
    Ok(())
}

/// Two-column plot series: bin center and mean.
pub fn write_series_tsv<W: Write>(mut w: W, x_name: &str, points: &[BinnedPoint]) -> Result<(), ReportError> {
    writeln!(w, "{x_name}\tmean_lifespan_days")?;
    for p in points {
        writeln!(w, "{}\t{}", fmt4(p.center), fmt4(p.mean))?;
    }
    Ok(())
}

pub fn write_predictions<W: Write>(w: W, rows: &[(String, Prediction)]) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record([
        "project_id",
        "lp",
        "log2_n",
        "log2_m",
        "language_factor",
        "label_offset",
        "size_term",
        "label_term",
    ])?;
    for (id, p) in rows {
        out.write_record([
            id.clone(),
            fmt4(p.lp),
            fmt4(p.log2_n),
            fmt4(p.log2_m),
            fmt4(p.language_factor),
            fmt4(p.label_offset),
            fmt4(p.size_term),
            fmt4(p.label_term),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_evaluation<W: Write>(w: W, report: &EvaluationReport) -> Result<(), ReportError> {
    let mut out = csv_writer(w);
    out.write_record(["project_id", "predicted", "actual", "relative_error"])?;
    for r in &report.rows {
        out.write_record([r.project_id.clone(), fmt4(r.predicted), fmt4(r.actual), fmt4(r.relative_error)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_round_trip() {
        let f = FeatureVector {
            project_id: "p,1".into(),
            n: 12,
            language: "C#".into(),
            m: 15.0,
            labels: ["HTML 5".to_string(), "web".to_string()].into(),
            core_dev_count: 2,
            description_word_count: 40,
        };
        let mut buf = Vec::new();
        write_features(&mut buf, std::slice::from_ref(&f)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("project_id,n,language,m,core_dev_count,labels,description_words\n"));
        assert!(text.contains("15.0000"));
        assert_eq!(read_features(buf.as_slice()).unwrap(), vec![f]);
    }

    #[test]
    fn bad_feature_rows() {
        let text = "project_id,n,language,m,core_dev_count,labels,description_words\np,x,Java,1,1,,0\n";
        assert!(matches!(read_features(text.as_bytes()), Err(ReportError::BadRow { row: 2, .. })));
        assert!(read_features("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn four_decimals() {
        assert_eq!(fmt4(145.65981), "145.6598");
        assert_eq!(fmt4(1.0), "1.0000");
    }
}
