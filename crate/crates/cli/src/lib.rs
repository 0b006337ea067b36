//! Config parsing and the simulate / converge / verify workflows behind the
//! `dmnls` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, Mode, RunConfig};
pub use run::{run, Options, RunError, OUTPUT_ENV};
