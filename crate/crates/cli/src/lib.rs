//! Scenario execution, report emission and independent verification around
//! the construction library.
//!
//! Exit-code taxonomy (stable across platforms):
//! 0 every verdict passed; 1 a certified violation (including tampered or
//! unverifiable reports and solver breakdowns); 2 infeasible input
//! (insufficient rank gaps, no admissible start index, tied head values);
//! 3 configuration errors.

use thiserror::Error;

pub mod config;
pub mod report;
pub mod runner;

pub use config::{load_config, ChainSpec, Mode, RunConfig, SequenceSpec, Tolerances};
pub use report::{load_report, verify_report, write_csv, write_report, Report};
pub use runner::run_scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read input: {context}")]
    ConfigIo { context: String },

    #[error("parse error: {context}")]
    Parse { context: String },

    #[error("schema error: {context}")]
    Schema { context: String },

    #[error("cross-field error: {context}")]
    CrossField { context: String },

    #[error("cannot write output: {context}")]
    EmitIo { context: String },

    #[error("tamper detected: {context}")]
    Tamper { context: String },

    #[error(transparent)]
    Core(lethargy_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lethargy_core::Error as E;
        match self {
            CliError::ConfigIo { .. }
            | CliError::Parse { .. }
            | CliError::Schema { .. }
            | CliError::CrossField { .. } => 3,
            CliError::EmitIo { .. } | CliError::Tamper { .. } => 1,
            CliError::Core(e) => match e {
                E::InsufficientGaps { .. }
                | E::NoAdmissibleStart
                | E::HeadTies { .. }
                | E::BaseTooSmall { .. } => 2,
                _ => 1,
            },
        }
    }
}
