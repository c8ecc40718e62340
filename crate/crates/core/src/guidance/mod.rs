//! Guideline catalog and compilation-error taxonomy, both loaded from
//! editable TOML data.

pub mod catalog;
pub mod classify;

use thiserror::Error;

pub use catalog::{
    guidelines_for, Guideline, GuidelineCatalog, GuidelineCategory, Stage, StagedGuideline,
};
pub use classify::{
    classify_error, error_lines, ErrorClassification, ErrorClassifier, ErrorPattern,
};

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("cannot parse data file: {0}")]
    Parse(String),
    #[error("invalid data file: {0}")]
    Invalid(String),
}
