//! Desk-scale MIMO imaging radar classification lab.
//!
//! The crate is split into four layers:
//!
//! - [`radar_sim`]: point-scatterer synthesis of 20×20×100 complex IQ cubes
//!   for a stepped-frequency MIMO radar observing five small object classes.
//! - [`dataset`]: deterministic dataset generation, the `RCUB` frame file
//!   format, the JSON-lines manifest, circular Gaussian noise injection and
//!   conversion of frames into network input tensors.
//! - [`nn`]: a fixed-graph CNN (batch norm, 5×5 convolutions, ReLU,
//!   size-preserving max pool, linear head) with explicit backward passes,
//!   Adam, the `RCNN` checkpoint format and finite-difference gradient checks.
//! - [`pipeline`]: training, clean/noisy/occluded evaluation, noise sweeps
//!   and report writing.

mod binio;
pub mod dataset;
pub mod error;
pub mod nn;
pub mod pipeline;
pub mod radar_sim;
pub mod rng;

pub use error::{Error, ErrorClass, Result};

/// Class names in label order.
pub const CLASS_NAMES: [&str; 5] = ["cup", "charger", "mouse", "gum", "bottle"];

/// Number of object classes.
pub const NUM_CLASSES: usize = 5;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
