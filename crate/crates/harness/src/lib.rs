//! Configuration, named experiments and file output for the `magrelax`
//! command-line tool.

pub mod cli;
pub mod config;
pub mod datum;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::Config;
pub use error::{HarnessError, Result};
pub use experiments::{run_experiment, ExperimentName, ExperimentSpec, Manifest};
