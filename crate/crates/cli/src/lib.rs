//! Experiment driver for precqaoa: JSON configs, grid sweeps, bound
//! reports, digitization runs and scaling-law fits.

pub mod bound_run;
pub mod cells;
pub mod config;
pub mod digitize;
pub mod fit;
pub mod optimal;
pub mod output;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    Config = 2,
    SkipOnly = 3,
    Violation = 4,
}

impl ExitStatus {
    /// Status of a finished run: violations win over an all-skipped grid.
    pub fn of_run(rows: usize, skipped: usize, violations: usize) -> Self {
        if violations > 0 {
            ExitStatus::Violation
        } else if rows == 0 || skipped == rows {
            ExitStatus::SkipOnly
        } else {
            ExitStatus::Success
        }
    }
}
