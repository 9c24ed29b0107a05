//! File formats, parallel execution and the command line for `eulerize-core`.

pub mod cli;
pub mod commands;
pub mod error;
pub mod exec;
pub mod io;
pub mod report;
pub mod vf3;

pub use error::{CliError, Result};
pub use report::{RunReport, RunStatus};
