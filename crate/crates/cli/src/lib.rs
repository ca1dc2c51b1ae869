//! Experiment runner for random pilot-hopping access: TOML specs, CSV
//! results and binary slot traces on top of `pilothop-core`.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod trace;

pub use config::{check, load, parse, validate, Diagnostic, Experiment};
pub use error::{CliError, ParseError};
pub use experiment::{compute, run, run_file, Artifact, RunOptions};
