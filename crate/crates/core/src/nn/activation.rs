use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

pub fn relu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let mut out = input.clone();
    for v in out.data_mut() {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    }
    out
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward<T: Scalar>(grad_out: &Tensor<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.shape() != input.shape() {
        return Err(Error::Shape(format!(
            "relu grad {:?} vs input {:?}",
            grad_out.shape(),
            input.shape()
        )));
    }
    let mut g = grad_out.clone();
    for (gv, x) in g.data_mut().iter_mut().zip(input.data()) {
        if !(*x > T::zero()) {
            *gv = T::zero();
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_and_positive_inputs() {
        let neg = Tensor::from_vec([1, 2, 2, 1], vec![-1.0f32, -0.5, -3.0, -1e-9]).unwrap();
        assert!(relu_forward(&neg).data().iter().all(|v| *v == 0.0));
        let pos = Tensor::from_vec([1, 2, 2, 1], vec![1.0f32, 0.5, 3.0, 1e-9]).unwrap();
        assert_eq!(relu_forward(&pos), pos);
    }

    #[test]
    fn derivative_at_zero_is_zero() {
        let x = Tensor::from_vec([1, 1, 3, 1], vec![0.0f64, 2.0, -2.0]).unwrap();
        let g = Tensor::from_vec([1, 1, 3, 1], vec![1.0f64, 1.0, 1.0]).unwrap();
        assert_eq!(relu_backward(&g, &x).unwrap().data(), &[0.0, 1.0, 0.0]);
    }
}
