//! Detection-driven navigation for wildlife-tracking UAVs.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computation:
//!
//! - [`geometry`]: nadir pinhole camera, ground sample distance and target projection.
//! - [`controller`]: the baseline x-y centroid tracker and the improved policy that adds
//!   altitude-band and bounding-box-size targeting with a hover preference.
//! - [`telemetry`]: telemetry/annotation reconciliation, usability accounting and
//!   behavior-by-altitude histograms.
//! - [`stats`]: descriptive statistics (mean, sample std, linear-interpolated quartiles).
//! - [`replay`]: expert action labelling, open-loop policy replay and move/hover scoring.
//! - [`sim`]: closed-loop kinematic simulator with a correlated-random-walk herd.
//!
//! File formats, configuration and the command line live in the `herdnav` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod controller;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod replay;
pub mod sim;
pub mod stats;
pub mod telemetry;

pub use controller::{Command, CommandKind, Policy, PolicyConfig, UavState};
pub use detection::Detection;
pub use error::Error;
pub use geometry::{CameraIntrinsics, PixelPoint};

/// Video frame rate of the annotated footage.
pub const FRAME_RATE_HZ: f64 = 30.0;
