//! Command implementations behind the `bai` binary.

pub mod check;
pub mod complexity;
pub mod config;
pub mod error;
pub mod rates;
pub mod simulate;

pub use error::{CliError, CliResult};
