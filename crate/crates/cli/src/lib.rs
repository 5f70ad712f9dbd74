//! Configuration, orchestration and CSV output for the `nhqhe` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod error;
pub mod format;
pub mod run;

pub use config::{load_config, parse_config, Mode, RunConfig};
pub use error::{CliError, Result};
pub use run::run;
