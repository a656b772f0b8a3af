//! 5×5 valid convolution, stride 1, NHWC layout.
//!
//! Both passes go through an im2col buffer covering a block of output rows,
//! so every pass is a handful of GEMM calls. Weight gradients are computed
//! per batch item and summed in item order, which keeps results identical
//! for any thread count.

use rand::Rng;
use rayon::prelude::*;

use super::tensor::{gemm, MatRef, Scalar, Tensor};
use crate::{Error, Result};

pub const KERNEL: usize = 5;

/// Target number of im2col rows per block.
const BLOCK_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T = f32> {
    pub in_ch: usize,
    pub out_ch: usize,
    /// `[kh][kw][in_ch][out_ch]`, i.e. a `(25·in_ch) × out_ch` matrix.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn zeros(in_ch: usize, out_ch: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            weights: vec![T::zero(); KERNEL * KERNEL * in_ch * out_ch],
            bias: vec![T::zero(); out_ch],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(in_ch: usize, out_ch: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(in_ch, out_ch);
        let fan = (KERNEL * KERNEL * (in_ch + out_ch)) as f64;
        let limit = (6.0 / fan).sqrt();
        for w in &mut layer.weights {
            *w = T::of(rng.random_range(-limit..limit));
        }
        layer
    }

    fn patch_len(&self) -> usize {
        KERNEL * KERNEL * self.in_ch
    }

    pub fn output_shape(&self, input: [usize; 4]) -> Result<[usize; 4]> {
        let [b, h, w, c] = input;
        if c != self.in_ch {
            return Err(Error::Shape(format!(
                "conv expects {} input channels, got {c}",
                self.in_ch
            )));
        }
        if h < KERNEL || w < KERNEL {
            return Err(Error::Shape(format!(
                "conv input {h}×{w} smaller than the {KERNEL}×{KERNEL} kernel"
            )));
        }
        if self.weights.len() != self.patch_len() * self.out_ch || self.bias.len() != self.out_ch {
            return Err(Error::Shape("conv parameter sizes inconsistent".into()));
        }
        Ok([b, h - KERNEL + 1, w - KERNEL + 1, self.out_ch])
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let out_shape = self.output_shape(input.shape())?;
        let [_, h, w, c] = input.shape();
        let [_, ho, wo, oc] = out_shape;
        let k = self.patch_len();
        let rows_per_block = (BLOCK_ROWS / wo).max(1);
        let mut out = Tensor::zeros(out_shape);
        let item_out = ho * wo * oc;
        if item_out == 0 {
            return Ok(out);
        }

        out.data_mut()
            .par_chunks_mut(item_out)
            .enumerate()
            .for_each(|(b, out_item)| {
                let x = input.item(b);
                let mut col = vec![T::zero(); rows_per_block * wo * k];
                for i0 in (0..ho).step_by(rows_per_block) {
                    let i1 = (i0 + rows_per_block).min(ho);
                    let m = (i1 - i0) * wo;
                    im2col(x, h, w, c, i0, i1, wo, &mut col[..m * k]);
                    let dst = &mut out_item[i0 * wo * oc..i1 * wo * oc];
                    for px in dst.chunks_exact_mut(oc) {
                        px.copy_from_slice(&self.bias);
                    }
                    gemm(
                        MatRef::new(&col[..m * k], m, k),
                        MatRef::new(&self.weights, k, oc),
                        T::one(),
                        dst,
                    );
                }
            });
        Ok(out)
    }

    /// Exact gradients of the forward map given `grad_out = ∂L/∂output`.
    pub fn backward(&self, grad_out: &Tensor<T>, input: &Tensor<T>) -> Result<ConvGrads<T>> {
        let out_shape = self.output_shape(input.shape())?;
        if grad_out.shape() != out_shape {
            return Err(Error::Shape(format!(
                "conv grad_out {:?} does not match output {out_shape:?}",
                grad_out.shape()
            )));
        }
        let [_, h, w, c] = input.shape();
        let [_, ho, wo, oc] = out_shape;
        let k = self.patch_len();
        let rows_per_block = (BLOCK_ROWS / wo).max(1);
        let mut grad_input = Tensor::zeros(input.shape());
        let item_in = h * w * c;

        let partials: Vec<(Vec<T>, Vec<T>)> = grad_input
            .data_mut()
            .par_chunks_mut(item_in)
            .enumerate()
            .map(|(b, gin)| {
                let x = input.item(b);
                let gy = grad_out.item(b);
                let mut gw = vec![T::zero(); k * oc];
                let mut gb = vec![T::zero(); oc];
                for px in gy.chunks_exact(oc) {
                    for (g, v) in gb.iter_mut().zip(px) {
                        *g += *v;
                    }
                }
                let mut col = vec![T::zero(); rows_per_block * wo * k];
                let mut gcol = vec![T::zero(); rows_per_block * wo * k];
                for i0 in (0..ho).step_by(rows_per_block) {
                    let i1 = (i0 + rows_per_block).min(ho);
                    let m = (i1 - i0) * wo;
                    let gy_block = &gy[i0 * wo * oc..i1 * wo * oc];
                    im2col(x, h, w, c, i0, i1, wo, &mut col[..m * k]);
                    // gw += colᵀ · gy
                    gemm(
                        MatRef::new(&col[..m * k], m, k).t(),
                        MatRef::new(gy_block, m, oc),
                        T::one(),
                        &mut gw,
                    );
                    // gcol = gy · wᵀ
                    gemm(
                        MatRef::new(gy_block, m, oc),
                        MatRef::new(&self.weights, k, oc).t(),
                        T::zero(),
                        &mut gcol[..m * k],
                    );
                    col2im_add(&gcol[..m * k], h, w, c, i0, i1, wo, gin);
                }
                (gw, gb)
            })
            .collect();

        let mut weights = vec![T::zero(); k * oc];
        let mut bias = vec![T::zero(); oc];
        for (gw, gb) in partials {
            for (a, v) in weights.iter_mut().zip(gw) {
                *a += v;
            }
            for (a, v) in bias.iter_mut().zip(gb) {
                *a += v;
            }
        }
        Ok(ConvGrads {
            input: grad_input,
            weights,
            bias,
        })
    }
}

/// Patch rows for output rows `i0..i1` of one item. Row `(i, j)` holds
/// `x[i+di, j+dj, c]` at column `(di·5 + dj)·C + c`.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    x: &[T],
    _h: usize,
    w: usize,
    c: usize,
    i0: usize,
    i1: usize,
    wo: usize,
    col: &mut [T],
) {
    let span = KERNEL * c;
    let k = KERNEL * span;
    for i in i0..i1 {
        for j in 0..wo {
            let row = &mut col[((i - i0) * wo + j) * k..][..k];
            for di in 0..KERNEL {
                let src = ((i + di) * w + j) * c;
                row[di * span..(di + 1) * span].copy_from_slice(&x[src..src + span]);
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds patch gradients into `gin`.
#[allow(clippy::too_many_arguments)]
fn col2im_add<T: Scalar>(
    gcol: &[T],
    _h: usize,
    w: usize,
    c: usize,
    i0: usize,
    i1: usize,
    wo: usize,
    gin: &mut [T],
) {
    let span = KERNEL * c;
    let k = KERNEL * span;
    for i in i0..i1 {
        for j in 0..wo {
            let row = &gcol[((i - i0) * wo + j) * k..][..k];
            for di in 0..KERNEL {
                let dst = ((i + di) * w + j) * c;
                for (g, v) in gin[dst..dst + span]
                    .iter_mut()
                    .zip(&row[di * span..(di + 1) * span])
                {
                    *g += *v;
                }
            }
        }
    }
}
