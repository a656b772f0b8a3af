use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Acquisition condition of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Clean,
    Occluded,
    Noisy,
}

impl Variant {
    pub fn code(self) -> u8 {
        match self {
            Variant::Clean => 0,
            Variant::Occluded => 1,
            Variant::Noisy => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Variant::Clean),
            1 => Some(Variant::Occluded),
            2 => Some(Variant::Noisy),
            _ => None,
        }
    }
}

/// One radar measurement: a `tx × rx × samples` complex cube, stored with
/// the sample index fastest, then rx, then tx.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    tx: usize,
    rx: usize,
    samples: usize,
    data: Vec<Complex32>,
    pub class_id: u8,
    pub variant: Variant,
    pub frame_id: u64,
}

impl ComplexFrame {
    pub fn new(
        tx: usize,
        rx: usize,
        samples: usize,
        data: Vec<Complex32>,
        class_id: u8,
        variant: Variant,
        frame_id: u64,
    ) -> Result<Self> {
        if data.len() != tx * rx * samples {
            return Err(Error::Shape(format!(
                "frame data has {} entries, expected {tx}×{rx}×{samples}",
                data.len()
            )));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numeric("frame construction".into()));
        }
        Ok(Self {
            tx,
            rx,
            samples,
            data,
            class_id,
            variant,
            frame_id,
        })
    }

    pub fn zeros(tx: usize, rx: usize, samples: usize) -> Self {
        Self {
            tx,
            rx,
            samples,
            data: vec![Complex32::new(0.0, 0.0); tx * rx * samples],
            class_id: 0,
            variant: Variant::Clean,
            frame_id: 0,
        }
    }

    /// `(tx, rx, samples)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.tx, self.rx, self.samples)
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex32] {
        &mut self.data
    }

    pub fn index(&self, tx: usize, rx: usize, n: usize) -> usize {
        (tx * self.rx + rx) * self.samples + n
    }

    pub fn get(&self, tx: usize, rx: usize, n: usize) -> Complex32 {
        self.data[self.index(tx, rx, n)]
    }

    /// Samples of one virtual channel.
    pub fn channel(&self, tx: usize, rx: usize) -> &[Complex32] {
        let start = self.index(tx, rx, 0);
        &self.data[start..start + self.samples]
    }

    /// Mean of `re²` over the cube.
    pub fn mean_power_real(&self) -> f64 {
        self.data.iter().map(|z| (z.re as f64).powi(2)).sum::<f64>() / self.data.len() as f64
    }

    /// Mean of `im²` over the cube.
    pub fn mean_power_imag(&self) -> f64 {
        self.data.iter().map(|z| (z.im as f64).powi(2)).sum::<f64>() / self.data.len() as f64
    }

    /// Mean of `|z|²` over the cube.
    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr() as f64).sum::<f64>() / self.data.len() as f64
    }
}
