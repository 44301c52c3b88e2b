//! Batch runner: a flat `key = value` config names one experiment, the
//! runner executes it against `renorm-core` and returns a [`Report`] that can
//! be emitted as a structured JSON document or as CSV blocks.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use experiments::run;
pub use report::{emit, Format, Report, Table, Verdict};

/// Process exit status for a report or a failure class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    VerdictFailure = 1,
    ConfigError = 2,
    NumericalFailure = 3,
}

impl Report {
    pub fn status(&self) -> Status {
        if !self.errors.is_empty() {
            Status::NumericalFailure
        } else if self.verdicts.iter().all(|v| v.passed) {
            Status::Pass
        } else {
            Status::VerdictFailure
        }
    }
}
