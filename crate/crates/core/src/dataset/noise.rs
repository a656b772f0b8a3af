//! Evaluation-time receiver noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::radar_sim::{ComplexFrame, Variant};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Circular complex Gaussian noise 𝒞𝒩(0, σ²): variance σ²/2 on each of I and Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be finite and ≥ 0, got {sigma2}"
            )));
        }
        Ok(Self { sigma2 })
    }

    pub fn per_component_std(&self) -> f64 {
        (self.sigma2 / 2.0).sqrt()
    }
}

/// `Y = X + Z`. With σ² = 0 the input is returned unchanged, variant included.
pub fn add_noise<R: Rng + ?Sized>(
    frame: &ComplexFrame,
    spec: NoiseSpec,
    rng_stream: &mut R,
) -> ComplexFrame {
    let mut out = frame.clone();
    if spec.sigma2 == 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, spec.per_component_std()).expect("validated σ²");
    for z in out.data_mut() {
        let re: f64 = normal.sample(rng_stream);
        let im: f64 = normal.sample(rng_stream);
        z.re = (z.re as f64 + re) as f32;
        z.im = (z.im as f64 + im) as f32;
    }
    out.variant = Variant::Noisy;
    out
}

/// Noise realization for one frame; identical across σ² values and input
/// modes so that sweep points differ only in scale.
pub fn eval_noise_stream(noise_seed: u64, frame_id: u64) -> rand_chacha::ChaCha8Rng {
    rng::stream(noise_seed, Purpose::EvalNoise, frame_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex32;

    fn frame() -> ComplexFrame {
        let data = (0..400)
            .map(|i| Complex32::new(i as f32 * 1e-3, 0.25))
            .collect();
        ComplexFrame::new(2, 2, 100, data, 1, Variant::Clean, 5).unwrap()
    }

    #[test]
    fn zero_variance_is_identity() {
        let f = frame();
        let out = add_noise(
            &f,
            NoiseSpec::new(0.0).unwrap(),
            &mut eval_noise_stream(1, 5),
        );
        assert_eq!(out, f);
    }

    #[test]
    fn input_is_untouched_and_variant_is_noisy() {
        let f = frame();
        let copy = f.clone();
        let out = add_noise(
            &f,
            NoiseSpec::new(1e-4).unwrap(),
            &mut eval_noise_stream(1, 5),
        );
        assert_eq!(f, copy);
        assert_eq!(out.variant, Variant::Noisy);
        assert_ne!(out.data(), f.data());
    }

    #[test]
    fn rejects_negative_variance() {
        assert!(NoiseSpec::new(-1e-9).is_err());
        assert!(NoiseSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn same_stream_same_noise() {
        let f = frame();
        let spec = NoiseSpec::new(1e-5).unwrap();
        let a = add_noise(&f, spec, &mut eval_noise_stream(9, 5));
        let b = add_noise(&f, spec, &mut eval_noise_stream(9, 5));
        assert_eq!(a, b);
    }
}
