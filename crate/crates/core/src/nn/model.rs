//! The fixed classification graph:
//!
//! ```text
//! input H×W×N ─ BN ─ conv5×5→3 ─ ReLU ─ BN ─ conv5×5→6 ─ ReLU
//!             ─ BN ─ conv5×5→12 ─ ReLU ─ maxpool 2×2/1 ─ flatten ─ FC→5
//! ```
//!
//! With the 400×100 input this gives 396×96×3, 392×92×6, 388×88×12 and a
//! 409728-wide flatten.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::activation::{relu_backward, relu_forward};
use super::adam::AdamState;
use super::batchnorm::{BatchNorm, BnCache};
use super::conv::{Conv2d, KERNEL};
use super::linear::Linear;
use super::loss::{argmax, softmax_cross_entropy};
use super::maxpool::{maxpool_backward, maxpool_forward};
use super::tensor::{Scalar, Tensor};
use crate::rng::{self, Purpose};
use crate::{Error, Result, NUM_CLASSES};

/// Conv output widths.
pub const CONV_CHANNELS: [usize; 3] = [3, 6, 12];
pub const STANDARD_INPUT_HEIGHT: usize = 400;
pub const STANDARD_INPUT_WIDTH: usize = 100;

/// Which part of the complex samples the network sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    Real,
    Imag,
    Complex,
}

impl InputMode {
    pub const ALL: [InputMode; 3] = [InputMode::Real, InputMode::Imag, InputMode::Complex];

    pub fn channels(self) -> usize {
        match self {
            InputMode::Real | InputMode::Imag => 1,
            InputMode::Complex => 2,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            InputMode::Real => 0,
            InputMode::Imag => 1,
            InputMode::Complex => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            InputMode::Real => "real",
            InputMode::Imag => "imag",
            InputMode::Complex => "complex",
        }
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(InputMode::Real),
            "imag" => Ok(InputMode::Imag),
            "complex" => Ok(InputMode::Complex),
            other => Err(Error::InvalidArgument(format!(
                "unknown input mode {other:?} (expected real, imag or complex)"
            ))),
        }
    }
}

/// Parameter tensors in checkpoint order.
pub const PARAM_NAMES: [&str; 14] = [
    "bn0.gamma",
    "bn0.beta",
    "conv1.weights",
    "conv1.bias",
    "bn1.gamma",
    "bn1.beta",
    "conv2.weights",
    "conv2.bias",
    "bn2.gamma",
    "bn2.beta",
    "conv3.weights",
    "conv3.bias",
    "fc.weights",
    "fc.bias",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RadarCnnModel<T = f32> {
    pub input_mode: InputMode,
    pub input_height: usize,
    pub input_width: usize,
    pub bn0: BatchNorm<T>,
    pub conv1: Conv2d<T>,
    pub bn1: BatchNorm<T>,
    pub conv2: Conv2d<T>,
    pub bn2: BatchNorm<T>,
    pub conv3: Conv2d<T>,
    pub fc: Linear<T>,
    pub adam: Option<AdamState<T>>,
}

/// Activations kept by a training forward for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    bn0: BnCache<T>,
    a0: Tensor<T>,
    r1: Tensor<T>,
    bn1: BnCache<T>,
    a1: Tensor<T>,
    r2: Tensor<T>,
    bn2: BnCache<T>,
    a2: Tensor<T>,
    r3: Tensor<T>,
    argmax: Vec<u32>,
    pooled: Tensor<T>,
    /// Output shape of every stage, in order.
    pub shapes: Vec<(&'static str, [usize; 4])>,
}

/// Gradients in [`PARAM_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
}

fn spatial_after_convs(h: usize, w: usize) -> (usize, usize) {
    let shrink = 3 * (KERNEL - 1);
    (h - shrink, w - shrink)
}

impl<T: Scalar> RadarCnnModel<T> {
    /// Fresh model for `height × width` inputs. Glorot-uniform conv and FC
    /// weights from the seeded init stream, zero biases, γ = 1, β = 0.
    pub fn new(input_mode: InputMode, height: usize, width: usize, seed: u64) -> Result<Self> {
        let min = 3 * (KERNEL - 1) + 1;
        if height < min || width < min {
            return Err(Error::Shape(format!(
                "input {height}×{width} too small for three {KERNEL}×{KERNEL} convolutions (min {min}×{min})"
            )));
        }
        let (h3, w3) = spatial_after_convs(height, width);
        let mut rng = rng::stream(seed, Purpose::Init, 0);
        let n = input_mode.channels();
        let [c1, c2, c3] = CONV_CHANNELS;
        Ok(Self {
            input_mode,
            input_height: height,
            input_width: width,
            bn0: BatchNorm::new(n),
            conv1: Conv2d::glorot(n, c1, &mut rng),
            bn1: BatchNorm::new(c1),
            conv2: Conv2d::glorot(c1, c2, &mut rng),
            bn2: BatchNorm::new(c2),
            conv3: Conv2d::glorot(c2, c3, &mut rng),
            fc: Linear::glorot(h3 * w3 * c3, NUM_CLASSES, &mut rng),
            adam: None,
        })
    }

    /// The 400×100 model.
    pub fn standard(input_mode: InputMode, seed: u64) -> Self {
        Self::new(
            input_mode,
            STANDARD_INPUT_HEIGHT,
            STANDARD_INPUT_WIDTH,
            seed,
        )
        .expect("standard input size is valid")
    }

    /// Expected stage shapes for a batch of `batch` items.
    pub fn shape_chain(&self, batch: usize) -> Vec<(&'static str, [usize; 4])> {
        let (h, w) = (self.input_height, self.input_width);
        let [c1, c2, c3] = CONV_CHANNELS;
        let s = KERNEL - 1;
        let (h3, w3) = spatial_after_convs(h, w);
        vec![
            ("input", [batch, h, w, self.input_mode.channels()]),
            ("conv1", [batch, h - s, w - s, c1]),
            ("conv2", [batch, h - 2 * s, w - 2 * s, c2]),
            ("conv3", [batch, h3, w3, c3]),
            ("maxpool", [batch, h3, w3, c3]),
            ("flatten", [batch, 1, 1, h3 * w3 * c3]),
            ("logits", [batch, 1, 1, NUM_CLASSES]),
        ]
    }

    fn check_stage(&self, idx: usize, t: &Tensor<T>) -> Result<()> {
        let (name, expected) = self.shape_chain(t.batch())[idx];
        if t.shape() != expected {
            return Err(Error::Shape(format!(
                "{name} produced {:?}, expected {expected:?}",
                t.shape()
            )));
        }
        t.ensure_finite(name)
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    pub fn params(&self) -> Vec<&[T]> {
        vec![
            &self.bn0.gamma,
            &self.bn0.beta,
            &self.conv1.weights,
            &self.conv1.bias,
            &self.bn1.gamma,
            &self.bn1.beta,
            &self.conv2.weights,
            &self.conv2.bias,
            &self.bn2.gamma,
            &self.bn2.beta,
            &self.conv3.weights,
            &self.conv3.bias,
            &self.fc.weights,
            &self.fc.bias,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            &mut self.bn0.gamma,
            &mut self.bn0.beta,
            &mut self.conv1.weights,
            &mut self.conv1.bias,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.conv2.weights,
            &mut self.conv2.bias,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            &mut self.conv3.weights,
            &mut self.conv3.bias,
            &mut self.fc.weights,
            &mut self.fc.bias,
        ]
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let expected = self.shape_chain(x.batch())[0].1;
        if x.shape() != expected {
            return Err(Error::Shape(format!(
                "model ({} mode) expects input {expected:?}, got {:?}",
                self.input_mode,
                x.shape()
            )));
        }
        x.ensure_finite("input")
    }

    /// Training-mode forward: batch statistics, running statistics updated.
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let mut shapes = vec![("input", x.shape())];

        let (a0, bn0) = self.bn0.forward_train(x)?;
        a0.ensure_finite("bn0")?;
        let r1 = relu_forward(&self.conv1.forward(&a0)?);
        self.check_stage(1, &r1)?;
        shapes.push(("conv1", r1.shape()));

        let (a1, bn1) = self.bn1.forward_train(&r1)?;
        a1.ensure_finite("bn1")?;
        let r2 = relu_forward(&self.conv2.forward(&a1)?);
        self.check_stage(2, &r2)?;
        shapes.push(("conv2", r2.shape()));

        let (a2, bn2) = self.bn2.forward_train(&r2)?;
        a2.ensure_finite("bn2")?;
        let r3 = relu_forward(&self.conv3.forward(&a2)?);
        self.check_stage(3, &r3)?;
        shapes.push(("conv3", r3.shape()));

        let pool = maxpool_forward(&r3)?;
        self.check_stage(4, &pool.output)?;
        shapes.push(("maxpool", pool.output.shape()));
        let pooled = pool.output.flatten();
        self.check_stage(5, &pooled)?;
        shapes.push(("flatten", pooled.shape()));

        let logits = self.fc.forward(&pooled)?;
        self.check_stage(6, &logits)?;
        shapes.push(("logits", logits.shape()));

        let cache = ForwardCache {
            bn0,
            a0,
            r1,
            bn1,
            a1,
            r2,
            bn2,
            a2,
            r3,
            argmax: pool.argmax,
            pooled,
            shapes,
        };
        Ok((logits, cache))
    }

    /// Eval-mode forward with running batch-norm statistics. Logits are
    /// `(batch, 1, 1, 5)`.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let a0 = self.bn0.forward_eval(x)?;
        a0.ensure_finite("bn0")?;
        let r1 = relu_forward(&self.conv1.forward(&a0)?);
        drop(a0);
        self.check_stage(1, &r1)?;
        let a1 = self.bn1.forward_eval(&r1)?;
        drop(r1);
        a1.ensure_finite("bn1")?;
        let r2 = relu_forward(&self.conv2.forward(&a1)?);
        drop(a1);
        self.check_stage(2, &r2)?;
        let a2 = self.bn2.forward_eval(&r2)?;
        drop(r2);
        a2.ensure_finite("bn2")?;
        let r3 = relu_forward(&self.conv3.forward(&a2)?);
        self.check_stage(3, &r3)?;
        let pooled = maxpool_forward(&r3)?.output.flatten();
        self.check_stage(5, &pooled)?;
        let logits = self.fc.forward(&pooled)?;
        self.check_stage(6, &logits)?;
        Ok(logits)
    }

    /// Back-propagates `∂L/∂logits` through the cached forward.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        grad_logits: &Tensor<T>,
    ) -> Result<Gradients<T>> {
        let fc = self.fc.backward(grad_logits, &cache.pooled)?;
        let d_pool = fc.input.reshape(cache.r3.shape())?;
        let d_r3 = maxpool_backward(&d_pool, &cache.argmax, cache.r3.shape())?;
        // ReLU outputs are positive exactly where their inputs were
        let d_z3 = relu_backward(&d_r3, &cache.r3)?;
        let c3 = self.conv3.backward(&d_z3, &cache.a2)?;
        let b2 = self.bn2.backward(&c3.input, &cache.bn2)?;
        let d_z2 = relu_backward(&b2.input, &cache.r2)?;
        let c2 = self.conv2.backward(&d_z2, &cache.a1)?;
        let b1 = self.bn1.backward(&c2.input, &cache.bn1)?;
        let d_z1 = relu_backward(&b1.input, &cache.r1)?;
        let c1 = self.conv1.backward(&d_z1, &cache.a0)?;
        let b0 = self.bn0.backward(&c1.input, &cache.bn0)?;

        let tensors = vec![
            b0.gamma, b0.beta, c1.weights, c1.bias, b1.gamma, b1.beta, c2.weights, c2.bias,
            b2.gamma, b2.beta, c3.weights, c3.bias, fc.weights, fc.bias,
        ];
        if tensors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("backward pass".into()));
        }
        Ok(Gradients { tensors })
    }

    /// Mean cross-entropy of a batch with gradients, in training mode.
    pub fn loss_and_gradients(
        &mut self,
        x: &Tensor<T>,
        labels: &[usize],
    ) -> Result<(StepStats, Gradients<T>)> {
        let (logits, cache) = self.forward_train(x)?;
        let ce = softmax_cross_entropy(logits.data(), labels, NUM_CLASSES)?;
        let correct = logits
            .data()
            .chunks_exact(NUM_CLASSES)
            .zip(labels)
            .filter(|(row, &l)| argmax(row) == l)
            .count();
        let grad = Tensor::from_vec(logits.shape(), ce.grad_logits)?;
        let grads = self.backward(&cache, &grad)?;
        let stats = StepStats {
            loss: ce.loss.to_f64().unwrap_or(f64::NAN),
            correct,
        };
        Ok((stats, grads))
    }

    /// Forward, backward and one Adam update. Creates the optimizer state
    /// with learning rate `lr` on first use.
    pub fn train_step(&mut self, x: &Tensor<T>, labels: &[usize], lr: f64) -> Result<StepStats> {
        let (stats, grads) = self.loss_and_gradients(x, labels)?;
        let sizes = self.param_sizes();
        let mut adam = self
            .adam
            .take()
            .unwrap_or_else(|| AdamState::new(&sizes, lr));
        let grad_refs: Vec<&[T]> = grads.tensors.iter().map(|g| g.as_slice()).collect();
        let result = adam.step(&mut self.params_mut(), &grad_refs);
        self.adam = Some(adam);
        result?;
        if self
            .params()
            .iter()
            .any(|p| p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Numeric("adam update".into()));
        }
        Ok(stats)
    }

    /// Predicted class per item (ties to the lowest index).
    pub fn classify(&self, x: &Tensor<T>) -> Result<Vec<usize>> {
        let logits = self.predict(x)?;
        Ok(logits
            .data()
            .chunks_exact(NUM_CLASSES)
            .map(argmax)
            .collect())
    }
}

impl<T: Scalar> RadarCnnModel<T> {
    /// Same weights in another precision (optimizer state dropped).
    pub fn cast<U: Scalar>(&self) -> RadarCnnModel<U> {
        fn v<T: Scalar, U: Scalar>(x: &[T]) -> Vec<U> {
            x.iter()
                .map(|a| U::of(a.to_f64().unwrap_or(f64::NAN)))
                .collect()
        }
        let bn = |b: &BatchNorm<T>| BatchNorm {
            gamma: v(&b.gamma),
            beta: v(&b.beta),
            running_mean: v(&b.running_mean),
            running_var: v(&b.running_var),
            epsilon: b.epsilon,
            momentum: b.momentum,
        };
        let conv = |c: &Conv2d<T>| Conv2d {
            in_ch: c.in_ch,
            out_ch: c.out_ch,
            weights: v(&c.weights),
            bias: v(&c.bias),
        };
        RadarCnnModel {
            input_mode: self.input_mode,
            input_height: self.input_height,
            input_width: self.input_width,
            bn0: bn(&self.bn0),
            conv1: conv(&self.conv1),
            bn1: bn(&self.bn1),
            conv2: conv(&self.conv2),
            bn2: bn(&self.bn2),
            conv3: conv(&self.conv3),
            fc: Linear {
                in_dim: self.fc.in_dim,
                out_dim: self.fc.out_dim,
                weights: v(&self.fc.weights),
                bias: v(&self.fc.bias),
            },
            adam: None,
        }
    }
}
