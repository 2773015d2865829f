//! Configuration, orchestration and file formats behind the `bosemix` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_with, Backend, ConfigError, RunConfig, RunMode};
pub use run::{run, simulate, RunError, RunOutcome, Simulation};
