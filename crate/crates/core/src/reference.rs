//! Published summary tables of the GitHub 2013 corpus.
//!
//! These numbers cannot be recomputed without the original dump. They seed
//! the default model parameters and serve as fixtures for report formats.

use crate::stats::{LabelStatsRow, LanguageStatsRow};

/// `(language, average, q1, median, q3)` in days.
pub const LANGUAGE_TABLE: [(&str, f64, f64, f64, f64); 11] = [
    ("Java", 145.6598, 25.0, 63.0, 182.0),
    ("C#", 154.2792, 26.0, 72.0, 195.0),
    ("JavaScript", 160.0089, 23.0, 79.0, 128.0),
    ("Objective-C", 167.9306, 24.0, 67.0, 213.0),
    ("C++", 169.6528, 28.0, 76.0, 215.0),
    ("PHP", 182.7401, 32.0, 93.0, 250.0),
    ("C", 206.0435, 31.0, 90.0, 273.0),
    ("Python", 210.2633, 34.0, 105.0, 289.0),
    ("Ruby", 213.5365, 27.0, 81.0, 272.0),
    ("Shell", 237.9406, 45.0, 137.0, 300.0),
    ("Perl", 343.0235, 58.0, 211.0, 526.0),
];

/// `(label, average)` in days.
pub const LABEL_TABLE: [(&str, f64); 26] = [
    ("editor", 577.0),
    ("Linux", 551.1),
    ("Compatibility", 521.7),
    ("optimization", 503.5),
    ("template", 493.4),
    ("Windows", 474.9),
    ("Website", 463.9),
    ("security", 413.9),
    ("enhancements", 395.0),
    ("Mobile", 389.0),
    ("API", 370.6),
    ("Database", 355.8),
    ("plugin", 318.5),
    ("server", 299.5),
    ("model", 297.0),
    ("IOS", 260.5),
    ("build", 259.1),
    ("architecture", 252.3),
    ("web", 241.4),
    ("bug", 212.5),
    ("Maps", 172.5),
    ("data IO", 126.0),
    ("back end", 124.5),
    ("J2ME", 70.0),
    ("HTML 5", 70.0),
    ("bootstrap", 60.0),
];

pub const GLOBAL_MEAN_LIFESPAN: f64 = 149.4;
pub const ALPHA: f64 = 1.204;
pub const BETA: f64 = 0.8;

/// Per-language rows. Group sizes were not published, so `count` is 1.
pub fn language_rows() -> Vec<LanguageStatsRow> {
    LANGUAGE_TABLE
        .iter()
        .map(|&(language, average, q1, median, q3)| LanguageStatsRow {
            language: language.to_string(),
            average,
            q1,
            median,
            q3,
            count: 1,
        })
        .collect()
}

/// Per-label rows. Group sizes were not published, so `count` is 1.
pub fn label_rows() -> Vec<LabelStatsRow> {
    LABEL_TABLE
        .iter()
        .map(|&(label, average)| LabelStatsRow {
            label: label.to_string(),
            average,
            count: 1,
        })
        .collect()
}
