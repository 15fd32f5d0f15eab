//! File formats, configuration and command implementations around `herdnav-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod report;

pub use error::{Error, ErrorKind, ErrorLine, Result};
