use serde::{Deserialize, Serialize};

use super::{Point3, RadarConfig};
use crate::SPEED_OF_LIGHT;

/// Physical element positions of the Tx and Rx arrays (meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub tx_positions: Vec<Point3>,
    pub rx_positions: Vec<Point3>,
}

impl ArrayGeometry {
    /// Number of (tx, rx) virtual channels.
    pub fn virtual_channels(&self) -> usize {
        self.tx_positions.len() * self.rx_positions.len()
    }
}

fn centered_line(count: usize, spacing: f64, axis: usize) -> Vec<Point3> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count)
        .map(|k| {
            let mut p = [0.0; 3];
            p[axis] = (k as f64 - mid) * spacing;
            p
        })
        .collect()
}

/// Tx elements on the horizontal (x) axis, Rx elements on the vertical (y)
/// axis, both centered at the origin with half-wavelength spacing. The
/// array looks along +z.
pub fn virtual_array_positions(config: &RadarConfig) -> ArrayGeometry {
    let spacing = config.wavelength_m() / 2.0;
    ArrayGeometry {
        tx_positions: centered_line(config.tx_count, spacing, 0),
        rx_positions: centered_line(config.rx_count, spacing, 1),
    }
}

/// Ideal range resolution c / (2B).
pub fn range_resolution(config: &RadarConfig) -> f64 {
    SPEED_OF_LIGHT / (2.0 * config.bandwidth_hz)
}
