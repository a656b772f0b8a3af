//! 2×2 max pool with stride 1. The bottom row and right column are
//! replicated so the output has the input's shape.

use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

/// Output plus, for every output element, the flat input index of its
/// window maximum.
#[derive(Debug, Clone)]
pub struct PoolOutput<T> {
    pub output: Tensor<T>,
    pub argmax: Vec<u32>,
}

/// Window members of `(i, j)` in row-major order, clamped at the edges.
#[inline]
fn window(i: usize, j: usize, h: usize, w: usize) -> [(usize, usize); 4] {
    let i1 = (i + 1).min(h - 1);
    let j1 = (j + 1).min(w - 1);
    [(i, j), (i, j1), (i1, j), (i1, j1)]
}

pub fn maxpool_forward<T: Scalar>(input: &Tensor<T>) -> Result<PoolOutput<T>> {
    if input.len() > u32::MAX as usize {
        return Err(Error::Shape("max pool input too large".into()));
    }
    let [b, h, w, c] = input.shape();
    let mut output = Tensor::zeros(input.shape());
    let mut argmax = vec![0u32; input.len()];
    let x = input.data();
    for bi in 0..b {
        for i in 0..h {
            for j in 0..w {
                let win = window(i, j, h, w);
                for ch in 0..c {
                    let at = |(p, q): (usize, usize)| ((bi * h + p) * w + q) * c + ch;
                    let mut best = at(win[0]);
                    for &pos in &win[1..] {
                        let idx = at(pos);
                        // strict: ties stay with the earliest element
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    let o = ((bi * h + i) * w + j) * c + ch;
                    output.data_mut()[o] = x[best];
                    argmax[o] = best as u32;
                }
            }
        }
    }
    Ok(PoolOutput { output, argmax })
}

/// Routes every output gradient to its window's argmax.
pub fn maxpool_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[u32],
    input_shape: [usize; 4],
) -> Result<Tensor<T>> {
    if grad_out.shape() != input_shape || argmax.len() != grad_out.len() {
        return Err(Error::Shape(format!(
            "max pool grad {:?} vs input {input_shape:?}",
            grad_out.shape()
        )));
    }
    let mut g = Tensor::zeros(input_shape);
    let gin = g.data_mut();
    for (v, &idx) in grad_out.data().iter().zip(argmax) {
        gin[idx as usize] += *v;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_image_is_fixed_point() {
        let x = Tensor::from_fn([1, 4, 5, 2], |[_, h, w, c]| {
            100.0 - (h * 10 + w * 2 + c) as f32
        });
        let p = maxpool_forward(&x).unwrap();
        assert_eq!(p.output, x);
    }

    #[test]
    fn constant_input_routes_to_first_element() {
        let x = Tensor::from_vec([1, 3, 3, 1], vec![2.0f64; 9]).unwrap();
        let p = maxpool_forward(&x).unwrap();
        assert_eq!(p.output, x);
        // every window's first element is the element itself
        let expected: Vec<u32> = (0..9).collect();
        assert_eq!(p.argmax, expected);
        let g = maxpool_backward(
            &Tensor::from_vec([1, 3, 3, 1], vec![1.0; 9]).unwrap(),
            &p.argmax,
            [1, 3, 3, 1],
        )
        .unwrap();
        assert!(g.data().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn edges_replicate() {
        // 2×2 image: [[1, 4], [3, 2]]
        let x = Tensor::from_vec([1, 2, 2, 1], vec![1.0f32, 4.0, 3.0, 2.0]).unwrap();
        let p = maxpool_forward(&x).unwrap();
        assert_eq!(p.output.data(), &[4.0, 4.0, 3.0, 2.0]);
        assert_eq!(p.argmax, vec![1, 1, 2, 3]);
        let g = maxpool_backward(
            &Tensor::from_vec([1, 2, 2, 1], vec![1.0, 10.0, 100.0, 1000.0]).unwrap(),
            &p.argmax,
            [1, 2, 2, 1],
        )
        .unwrap();
        assert_eq!(g.data(), &[0.0, 11.0, 100.0, 1000.0]);
    }
}
