//! Command-line front end for `sparselab`: JSON instance files, run reports,
//! CSV tables and the frozen baselines of the verification suites.

pub mod baselines;
pub mod commands;
pub mod instance;
pub mod report;

pub use baselines::Baselines;
pub use commands::{
    cmd_char, cmd_opnorm, cmd_sharpness, cmd_testing, cmd_verify, CliError, Output,
};
pub use instance::{InstanceFile, ParseError};
pub use report::{fmt_float, RunReport, Table};
