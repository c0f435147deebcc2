//! Configuration files, experiment dispatch and CSV/text exports behind the
//! `solver` binary.

mod config;
mod run;

pub use config::{ConfigError, Mode, RunConfig, TrapKind};
pub use run::{run, RunError, RunOptions, SummaryRow};

#[cfg(test)]
mod tests;
