use rand::Rng;

use super::tensor::{gemm, MatRef, Scalar, Tensor};
use crate::{Error, Result};

/// Fully connected layer on flattened items; `weights` is `in_dim × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T = f32> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct LinearGrads<T> {
    pub input: Tensor<T>,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(in_dim, out_dim);
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        for w in &mut layer.weights {
            *w = T::of(rng.random_range(-limit..limit));
        }
        layer
    }

    fn check(&self, x: &Tensor<T>) -> Result<()> {
        if x.item_len() != self.in_dim {
            return Err(Error::Shape(format!(
                "linear layer expects {} inputs per item, got {}",
                self.in_dim,
                x.item_len()
            )));
        }
        Ok(())
    }

    /// Output shape `(batch, 1, 1, out_dim)`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(x)?;
        let b = x.batch();
        let mut y = Tensor::zeros([b, 1, 1, self.out_dim]);
        for row in y.data_mut().chunks_exact_mut(self.out_dim) {
            row.copy_from_slice(&self.bias);
        }
        gemm(
            MatRef::new(x.data(), b, self.in_dim),
            MatRef::new(&self.weights, self.in_dim, self.out_dim),
            T::one(),
            y.data_mut(),
        );
        Ok(y)
    }

    pub fn backward(&self, grad_out: &Tensor<T>, x: &Tensor<T>) -> Result<LinearGrads<T>> {
        self.check(x)?;
        let b = x.batch();
        if grad_out.shape() != [b, 1, 1, self.out_dim] {
            return Err(Error::Shape(format!(
                "linear grad {:?} for batch {b}",
                grad_out.shape()
            )));
        }
        let mut weights = vec![T::zero(); self.in_dim * self.out_dim];
        gemm(
            MatRef::new(x.data(), b, self.in_dim).t(),
            MatRef::new(grad_out.data(), b, self.out_dim),
            T::zero(),
            &mut weights,
        );
        let mut bias = vec![T::zero(); self.out_dim];
        for row in grad_out.data().chunks_exact(self.out_dim) {
            for (a, v) in bias.iter_mut().zip(row) {
                *a += *v;
            }
        }
        let mut input = Tensor::zeros(x.shape());
        gemm(
            MatRef::new(grad_out.data(), b, self.out_dim),
            MatRef::new(&self.weights, self.in_dim, self.out_dim).t(),
            T::zero(),
            input.data_mut(),
        );
        Ok(LinearGrads {
            input,
            weights,
            bias,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_and_backward_small() {
        let mut l = Linear::<f64>::zeros(3, 2);
        l.weights = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        l.bias = vec![0.5, -0.5];
        let x = Tensor::from_vec([2, 1, 3, 1], vec![1.0, 0.0, -1.0, 2.0, 1.0, 0.0]).unwrap();
        let y = l.forward(&x).unwrap();
        assert_eq!(y.shape(), [2, 1, 1, 2]);
        assert_eq!(y.data(), &[-3.5, -4.5, 5.5, 7.5]);
        let gy = Tensor::from_vec([2, 1, 1, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let g = l.backward(&gy, &x).unwrap();
        assert_eq!(g.bias, vec![1.0, 1.0]);
        assert_eq!(g.weights, vec![1.0, 2.0, 0.0, 1.0, -1.0, 0.0]);
        assert_eq!(g.input.data(), &[1.0, 3.0, 5.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn wrong_width_rejected() {
        let l = Linear::<f32>::zeros(4, 2);
        assert!(l.forward(&Tensor::zeros([1, 1, 3, 1])).is_err());
    }
}
