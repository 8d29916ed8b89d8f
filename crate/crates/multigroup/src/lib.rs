//! Experiments, file formats and the command-line front end for
//! [`multigroup_core`].
//!
//! - [`experiments`]: synthetic designs, tuning and the scenario runner.
//! - [`io`]: CSV datasets, interval group files, result and trace tables.
//! - [`config`]: flat `key = value` configuration files and run manifests.
//! - [`plot`]: a small SVG writer for error-bar and fit plots.
//! - [`audit`]: parallel privacy audit of Shaky Prepend transcripts.
//! - [`cli`]: the `multigroup` command.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod cli;
pub mod config;
mod error;
pub mod experiments;
pub mod io;
pub mod plot;

pub use error::{Error, Result};
pub use multigroup_core as core;
