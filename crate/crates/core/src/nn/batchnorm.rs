//! Per-channel batch normalization over (batch, height, width).

use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, running statistics updated.
    Train,
    /// Running statistics, layer state untouched.
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T = f32> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub epsilon: f64,
    pub momentum: f64,
}

/// What the backward pass needs from a training forward.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BnGrads<T> {
    pub input: Tensor<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            epsilon: BN_EPSILON,
            momentum: BN_MOMENTUM,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != self.channels() {
            return Err(Error::Shape(format!(
                "batch norm over {} channels got {}",
                self.channels(),
                x.channels()
            )));
        }
        Ok(())
    }

    /// Normalizes with batch statistics and updates the running averages
    /// (unbiased variance, momentum 0.1).
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, BnCache<T>)> {
        self.check(x)?;
        if x.batch() < 2 {
            return Err(Error::InvalidArgument(
                "batch norm in train mode needs a batch of at least 2".into(),
            ));
        }
        let c = self.channels();
        let count = x.len() / c;
        let mut sum = vec![0.0f64; c];
        for px in x.data().chunks_exact(c) {
            for (s, v) in sum.iter_mut().zip(px) {
                *s += v.to_f64().unwrap_or(f64::NAN);
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = vec![0.0f64; c];
        for px in x.data().chunks_exact(c) {
            for ((s, v), m) in sq.iter_mut().zip(px).zip(&mean) {
                let d = v.to_f64().unwrap_or(f64::NAN) - m;
                *s += d * d;
            }
        }
        let var: Vec<f64> = sq.iter().map(|s| s / count as f64).collect();
        let inv_std: Vec<f64> = var
            .iter()
            .map(|v| 1.0 / (v + self.epsilon).sqrt())
            .collect();

        let mut x_hat = Tensor::zeros(x.shape());
        let mut y = Tensor::zeros(x.shape());
        for ((px, xh), py) in x
            .data()
            .chunks_exact(c)
            .zip(x_hat.data_mut().chunks_exact_mut(c))
            .zip(y.data_mut().chunks_exact_mut(c))
        {
            for ch in 0..c {
                let n = (px[ch].to_f64().unwrap_or(f64::NAN) - mean[ch]) * inv_std[ch];
                xh[ch] = T::of(n);
                py[ch] = self.gamma[ch] * T::of(n) + self.beta[ch];
            }
        }

        let m = self.momentum;
        let unbias = count as f64 / (count as f64 - 1.0);
        for ch in 0..c {
            let rm = self.running_mean[ch].to_f64().unwrap_or(f64::NAN);
            let rv = self.running_var[ch].to_f64().unwrap_or(f64::NAN);
            self.running_mean[ch] = T::of((1.0 - m) * rm + m * mean[ch]);
            self.running_var[ch] = T::of((1.0 - m) * rv + m * var[ch] * unbias);
        }
        Ok((y, BnCache { x_hat, inv_std }))
    }

    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(x)?;
        let c = self.channels();
        let scale: Vec<T> = (0..c)
            .map(|ch| {
                let rv = self.running_var[ch].to_f64().unwrap_or(f64::NAN);
                self.gamma[ch] * T::of(1.0 / (rv + self.epsilon).sqrt())
            })
            .collect();
        let mut y = Tensor::zeros(x.shape());
        for (px, py) in x
            .data()
            .chunks_exact(c)
            .zip(y.data_mut().chunks_exact_mut(c))
        {
            for ch in 0..c {
                py[ch] = (px[ch] - self.running_mean[ch]) * scale[ch] + self.beta[ch];
            }
        }
        Ok(y)
    }

    /// Gradients of a training-mode forward.
    pub fn backward(&self, grad_out: &Tensor<T>, cache: &BnCache<T>) -> Result<BnGrads<T>> {
        if grad_out.shape() != cache.x_hat.shape() {
            return Err(Error::Shape(format!(
                "batch norm grad {:?} vs cached {:?}",
                grad_out.shape(),
                cache.x_hat.shape()
            )));
        }
        let c = self.channels();
        let count = (grad_out.len() / c) as f64;
        let mut sum_dy = vec![0.0f64; c];
        let mut sum_dy_xhat = vec![0.0f64; c];
        for (gy, xh) in grad_out
            .data()
            .chunks_exact(c)
            .zip(cache.x_hat.data().chunks_exact(c))
        {
            for ch in 0..c {
                let g = gy[ch].to_f64().unwrap_or(f64::NAN);
                sum_dy[ch] += g;
                sum_dy_xhat[ch] += g * xh[ch].to_f64().unwrap_or(f64::NAN);
            }
        }
        // dx = γ·inv_std·(dy − mean(dy) − x̂·mean(dy·x̂))
        let mut input = Tensor::zeros(grad_out.shape());
        for ((gy, xh), gx) in grad_out
            .data()
            .chunks_exact(c)
            .zip(cache.x_hat.data().chunks_exact(c))
            .zip(input.data_mut().chunks_exact_mut(c))
        {
            for ch in 0..c {
                let g = gy[ch].to_f64().unwrap_or(f64::NAN);
                let x = xh[ch].to_f64().unwrap_or(f64::NAN);
                let k = self.gamma[ch].to_f64().unwrap_or(f64::NAN) * cache.inv_std[ch];
                gx[ch] = T::of(k * (g - sum_dy[ch] / count - x * sum_dy_xhat[ch] / count));
            }
        }
        Ok(BnGrads {
            input,
            gamma: sum_dy_xhat.into_iter().map(T::of).collect(),
            beta: sum_dy.into_iter().map(T::of).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    #[test]
    fn constant_input_normalizes_to_zero() {
        let mut bn = BatchNorm::<f32>::new(2);
        let x = Tensor::from_fn([4, 3, 3, 2], |[_, _, _, c]| if c == 0 { 3.5 } else { -1.0 });
        let (y, _) = bn.forward_train(&x).unwrap();
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn train_output_is_standardized() {
        let mut rng = stream(0, Purpose::Init, 0);
        let mut bn = BatchNorm::<f64>::new(3);
        let x = Tensor::from_fn([8, 5, 4, 3], |[_, _, _, c]| {
            rng.random_range(-1.0..1.0) * (c + 1) as f64 + 2.0 * c as f64
        });
        let (y, _) = bn.forward_train(&x).unwrap();
        for ch in 0..3 {
            let vals: Vec<f64> = y.data().iter().skip(ch).step_by(3).copied().collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-4);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut bn = BatchNorm::<f64>::new(1);
        // values 0..8: mean 3.5, biased var 5.25, unbiased 6.0
        let x = Tensor::from_fn([2, 2, 2, 1], |[b, h, w, _]| (b * 4 + h * 2 + w) as f64);
        bn.forward_train(&x).unwrap();
        assert!((bn.running_mean[0] - 0.35).abs() < 1e-12);
        assert!((bn.running_var[0] - (0.9 + 0.6)).abs() < 1e-12);
    }

    #[test]
    fn eval_leaves_state_untouched() {
        let mut bn = BatchNorm::<f32>::new(1);
        bn.running_mean[0] = 1.0;
        bn.running_var[0] = 4.0;
        let before = bn.clone();
        let x = Tensor::from_vec([1, 1, 2, 1], vec![1.0, 3.0]).unwrap();
        let y = bn.forward_eval(&x).unwrap();
        assert_eq!(bn, before);
        assert!(y.data()[0].abs() < 1e-6);
        assert!((y.data()[1] - 2.0 / (4.0f32 + 1e-5).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn batch_of_one_rejected_in_train_mode() {
        let mut bn = BatchNorm::<f32>::new(1);
        let x = Tensor::zeros([1, 4, 4, 1]);
        assert!(bn.forward_train(&x).is_err());
        assert!(bn.forward_eval(&x).is_ok());
    }
}
