//! Stepped-frequency MIMO radar simulator.
//!
//! Scenes are clouds of point scatterers. Each virtual channel (one Tx, one
//! Rx) observes the sum of the scatterers' round-trip phase ramps across the
//! frequency steps of the sweep, which yields the `tx × rx × samples` complex
//! data cube the classifier consumes.

mod frame;
mod geometry;
mod scene;
mod synth;

pub use frame::{ComplexFrame, Variant};
pub use geometry::{range_resolution, virtual_array_positions, ArrayGeometry};
pub use scene::{
    apply_occlusion, object_template, place_object, sample_object_scene, table_clutter,
    ObjectClass, OccluderSpec, Pose, SceneParams, SceneSpec, NOMINAL_ANCHOR,
};
pub use synth::{calibrate_scene, synthesize_channel, synthesize_frame};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

pub type Point3 = [f64; 3];

/// Radar and array parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub tx_count: usize,
    pub rx_count: usize,
    pub samples: usize,
    pub bandwidth_hz: f64,
    pub center_freq_hz: f64,
    /// Stored for reference only; does not enter the signal model.
    pub sampling_res_hz: f64,
    /// Calibration target for the mean power of each IQ component.
    pub target_mean_power: f64,
    /// Total complex variance of the receiver noise added to every frame.
    pub noise_floor_var: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self::standard()
    }
}

impl RadarConfig {
    /// 20 Tx × 20 Rx, 100 frequency points over 5 GHz at 65.5 GHz.
    pub fn standard() -> Self {
        Self {
            tx_count: 20,
            rx_count: 20,
            samples: 100,
            bandwidth_hz: 5.0e9,
            center_freq_hz: 65.5e9,
            sampling_res_hz: 10.0e3,
            target_mean_power: 4.0e-4,
            noise_floor_var: 1.0e-7,
        }
    }

    pub fn freq_step_hz(&self) -> f64 {
        self.bandwidth_hz / (self.samples - 1) as f64
    }

    /// Frequency of sample `n`.
    pub fn freq_hz(&self, n: usize) -> f64 {
        self.center_freq_hz - self.bandwidth_hz / 2.0 + n as f64 * self.freq_step_hz()
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_freq_hz
    }

    /// One-way range at which the phase step between adjacent frequency
    /// points wraps by a full cycle.
    pub fn unambiguous_range_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.freq_step_hz())
    }

    pub fn channels(&self) -> usize {
        self.tx_count * self.rx_count
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_count == 0 || self.rx_count == 0 {
            return Err(Error::Config(
                "tx_count and rx_count must be positive".into(),
            ));
        }
        if self.tx_count > u16::MAX as usize || self.rx_count > u16::MAX as usize {
            return Err(Error::Config(
                "tx_count and rx_count must fit in u16".into(),
            ));
        }
        if self.samples < 2 || self.samples > u32::MAX as usize {
            return Err(Error::Config("samples must be at least 2".into()));
        }
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("center_freq_hz", self.center_freq_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.bandwidth_hz >= 2.0 * self.center_freq_hz {
            return Err(Error::Config(
                "bandwidth exceeds twice the center frequency".into(),
            ));
        }
        for (name, v) in [
            ("target_mean_power", self.target_mean_power),
            ("noise_floor_var", self.noise_floor_var),
            ("sampling_res_hz", self.sampling_res_hz),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A point reflector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Point3,
    /// Lumped √RCS · path-loss factor.
    pub amplitude: Complex64,
}

impl Scatterer {
    pub fn new(position: Point3, amplitude: Complex64) -> Self {
        Self {
            position,
            amplitude,
        }
    }

    pub fn real(position: Point3, amplitude: f64) -> Self {
        Self::new(position, Complex64::new(amplitude, 0.0))
    }
}

pub(crate) fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}
