//! Mining toolkit for open-source project life-spans.
//!
//! The crate turns commit histories into life-span records, tabulates how
//! life-span varies with project characteristics, and fits and evaluates a
//! closed-form life-span predictor. Datasets arrive as three line-delimited
//! JSON files (see [`ingest`]); [`syngen`] produces such files with a known
//! ground truth.

pub mod cli;
pub mod domain;
pub mod features;
pub mod ingest;
pub mod lifespan;
pub mod model;
pub mod reference;
pub mod report;
pub mod stats;
pub mod syngen;

pub use domain::{
    validate_dataset, CommitTimeline, DeveloperProfile, FeatureVector, LifespanRecord, ProjectRecord,
    ValidationReport, Violation,
};
pub use ingest::Dataset;
pub use model::{ModelParams, Prediction};
