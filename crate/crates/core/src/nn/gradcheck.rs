//! Central finite-difference verification of every backward pass.
//!
//! All checks run the real layer code instantiated at `f64`. Each layer is
//! wrapped in a scalar objective `L = Σ r·y` with a fixed random projection
//! `r`, so the analytic gradient is the layer's backward applied to `r`.
//! The numerical side only ever calls forward passes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::activation::{relu_backward, relu_forward};
use super::batchnorm::BatchNorm;
use super::conv::Conv2d;
use super::linear::Linear;
use super::loss::softmax_cross_entropy;
use super::maxpool::{maxpool_backward, maxpool_forward};
use super::model::{InputMode, RadarCnnModel};
use super::tensor::Tensor;
use crate::rng::{self, Purpose};
use crate::Result;

/// Layer-level tolerance on the relative error.
pub const LAYER_TOLERANCE: f64 = 1e-4;
/// End-to-end (reduced-scale model) tolerance.
pub const MODEL_TOLERANCE: f64 = 1e-3;
/// Step used for the layer-level checks.
pub const LAYER_STEP: f64 = 1e-3;
/// Step used for the end-to-end check. Smaller than the layer step so that
/// perturbations rarely cross a ReLU or max-pool switching point.
pub const MODEL_STEP: f64 = 1e-6;
/// Denominator floor of the relative error.
const REL_FLOOR: f64 = 1e-8;

/// Surrogate input used by the end-to-end check.
pub const SURROGATE_HEIGHT: usize = 20;
pub const SURROGATE_WIDTH: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckResult {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub results: Vec<GradCheckResult>,
}

impl GradCheckReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(GradCheckResult::passed)
    }
}

/// `(f(x+h) − f(x−h)) / 2h` for coordinate `i`; restores `x[i]`.
pub fn central_difference(
    x: &mut [f64],
    i: usize,
    h: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let plus = f(x);
    x[i] = orig - h;
    let minus = f(x);
    x[i] = orig;
    (plus - minus) / (2.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn max_rel(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max)
}

fn normal_tensor(shape: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.sample(StandardNormal))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numeric gradient of `f` over every coordinate of `x`.
fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut work = x.to_vec();
    (0..x.len())
        .map(|i| central_difference(&mut work, i, h, &mut f))
        .collect()
}

fn result(name: &str, analytic: &[f64], numeric: &[f64], tolerance: f64) -> GradCheckResult {
    GradCheckResult {
        name: name.to_string(),
        checked: analytic.len(),
        max_rel_error: max_rel(analytic, numeric),
        tolerance,
    }
}

/// 2×8×8×2 input, 3 output channels.
pub fn check_conv(seed: u64) -> Result<GradCheckResult> {
    let mut rng = rng::stream(seed, Purpose::Init, 101);
    let layer = Conv2d::<f64>::glorot(2, 3, &mut rng);
    let x = normal_tensor([2, 8, 8, 2], &mut rng);
    let r = normal_tensor([2, 4, 4, 3], &mut rng);
    let g = layer.backward(&r, &x)?;

    let objective =
        |layer: &Conv2d<f64>, x: &Tensor<f64>| dot(layer.forward(x).unwrap().data(), r.data());

    let num_x = numeric_grad(x.data(), LAYER_STEP, |v| {
        objective(&layer, &Tensor::from_vec(x.shape(), v.to_vec()).unwrap())
    });
    let num_w = numeric_grad(&layer.weights, LAYER_STEP, |v| {
        let mut l = layer.clone();
        l.weights.copy_from_slice(v);
        objective(&l, &x)
    });
    let num_b = numeric_grad(&layer.bias, LAYER_STEP, |v| {
        let mut l = layer.clone();
        l.bias.copy_from_slice(v);
        objective(&l, &x)
    });
    let analytic: Vec<f64> = [g.input.data(), &g.weights, &g.bias].concat();
    let numeric: Vec<f64> = [num_x, num_w, num_b].concat();
    Ok(result("conv2d", &analytic, &numeric, LAYER_TOLERANCE))
}

/// 2×4×4×3 training-mode batch norm with non-trivial γ, β.
pub fn check_batchnorm(seed: u64) -> Result<GradCheckResult> {
    let mut rng = rng::stream(seed, Purpose::Init, 102);
    let mut layer = BatchNorm::<f64>::new(3);
    for (g, b) in layer.gamma.iter_mut().zip(layer.beta.iter_mut()) {
        *g = rng.random_range(0.5..1.5);
        *b = rng.random_range(-0.5..0.5);
    }
    let x = normal_tensor([2, 4, 4, 3], &mut rng);
    let r = normal_tensor([2, 4, 4, 3], &mut rng);
    let (_, cache) = layer.clone().forward_train(&x)?;
    let g = layer.backward(&r, &cache)?;

    let objective = |layer: &BatchNorm<f64>, x: &Tensor<f64>| {
        let (y, _) = layer.clone().forward_train(x).unwrap();
        dot(y.data(), r.data())
    };
    let num_x = numeric_grad(x.data(), LAYER_STEP, |v| {
        objective(&layer, &Tensor::from_vec(x.shape(), v.to_vec()).unwrap())
    });
    let num_g = numeric_grad(&layer.gamma, LAYER_STEP, |v| {
        let mut l = layer.clone();
        l.gamma.copy_from_slice(v);
        objective(&l, &x)
    });
    let num_b = numeric_grad(&layer.beta, LAYER_STEP, |v| {
        let mut l = layer.clone();
        l.beta.copy_from_slice(v);
        objective(&l, &x)
    });
    let analytic: Vec<f64> = [g.input.data(), &g.gamma, &g.beta].concat();
    let numeric: Vec<f64> = [num_x, num_g, num_b].concat();
    Ok(result("batchnorm", &analytic, &numeric, LAYER_TOLERANCE))
}

/// Mixed-sign input kept at least 0.05 away from the kink.
pub fn check_relu(seed: u64) -> Result<GradCheckResult> {
    let mut rng = rng::stream(seed, Purpose::Init, 103);
    let x = Tensor::from_fn([2, 5, 5, 2], |_| {
        let mag: f64 = rng.random_range(0.05..2.0);
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    });
    let r = normal_tensor(x.shape(), &mut rng);
    let analytic = relu_backward(&r, &x)?;
    let numeric = numeric_grad(x.data(), LAYER_STEP, |v| {
        let t = Tensor::from_vec(x.shape(), v.to_vec()).unwrap();
        dot(relu_forward(&t).data(), r.data())
    });
    Ok(result("relu", analytic.data(), &numeric, LAYER_TOLERANCE))
}

/// Distinct input values on a 0.01 grid so no step crosses a tie.
pub fn check_maxpool(seed: u64) -> Result<GradCheckResult> {
    let mut rng = rng::stream(seed, Purpose::Init, 104);
    let shape = [2, 6, 6, 2];
    let n: usize = shape.iter().product();
    let mut values: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
    rand::seq::SliceRandom::shuffle(values.as_mut_slice(), &mut rng);
    let x = Tensor::from_vec(shape, values)?;
    let r = normal_tensor(shape, &mut rng);
    let pool = maxpool_forward(&x)?;
    let analytic = maxpool_backward(&r, &pool.argmax, shape)?;
    let numeric = numeric_grad(x.data(), LAYER_STEP, |v| {
        let t = Tensor::from_vec(shape, v.to_vec()).unwrap();
        dot(maxpool_forward(&t).unwrap().output.data(), r.data())
    });
    Ok(result(
        "maxpool",
        analytic.data(),
        &numeric,
        LAYER_TOLERANCE,
    ))
}

pub fn check_linear(seed: u64) -> Result<GradCheckResult> {
    let mut rng = rng::stream(seed, Purpose::Init, 105);
    let layer = Linear::<f64>::glorot(24, 5, &mut rng);
    let x = normal_tensor([3, 2, 3, 4], &mut rng);
    let r = normal_tensor([3, 1, 1, 5], &mut rng);
    let g = layer.backward(&r, &x)?;
    let objective = |l: &Linear<f64>, x: &Tensor<f64>| dot(l.forward(x).unwrap().data(), r.data());
    let num_x = numeric_grad(x.data(), LAYER_STEP, |v| {
        objective(&layer, &Tensor::from_vec(x.shape(), v.to_vec()).unwrap())
    });
    let num_w = numeric_grad(&layer.weights, LAYER_STEP, |v| {
        let mut l = layer.clone();
        l.weights.copy_from_slice(v);
        objective(&l, &x)
    });
    let num_b = numeric_grad(&layer.bias, LAYER_STEP, |v| {
        let mut l = layer.clone();
        l.bias.copy_from_slice(v);
        objective(&l, &x)
    });
    let analytic: Vec<f64> = [g.input.data(), &g.weights, &g.bias].concat();
    let numeric: Vec<f64> = [num_x, num_w, num_b].concat();
    Ok(result("linear", &analytic, &numeric, LAYER_TOLERANCE))
}

pub fn check_cross_entropy(seed: u64) -> Result<GradCheckResult> {
    let mut rng = rng::stream(seed, Purpose::Init, 106);
    let logits: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
    let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..5)).collect();
    let analytic = softmax_cross_entropy(&logits, &labels, 5)?.grad_logits;
    let numeric = numeric_grad(&logits, LAYER_STEP, |v| {
        softmax_cross_entropy(v, &labels, 5).unwrap().loss
    });
    Ok(result(
        "softmax_cross_entropy",
        &analytic,
        &numeric,
        LAYER_TOLERANCE,
    ))
}

/// Mean cross-entropy gradient of a 20×16 complex-input model w.r.t. 20
/// parameters: one from each of the 14 tensors plus 6 drawn anywhere.
pub fn check_model(seed: u64) -> Result<GradCheckResult> {
    let mut rng = rng::stream(seed, Purpose::Init, 107);
    let mut model =
        RadarCnnModel::<f64>::new(InputMode::Complex, SURROGATE_HEIGHT, SURROGATE_WIDTH, seed)?;
    // non-trivial affine parameters
    for bn in [&mut model.bn0, &mut model.bn1, &mut model.bn2] {
        for (g, b) in bn.gamma.iter_mut().zip(bn.beta.iter_mut()) {
            *g = rng.random_range(0.5..1.5);
            *b = rng.random_range(-0.2..0.2);
        }
    }
    let x = normal_tensor([4, SURROGATE_HEIGHT, SURROGATE_WIDTH, 2], &mut rng);
    let labels = [0usize, 2, 4, 1];
    let (_, grads) = model.clone().loss_and_gradients(&x, &labels)?;

    let sizes = model.param_sizes();
    let mut picks: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(t, &n)| (t, rng.random_range(0..n)))
        .collect();
    let total: usize = sizes.iter().sum();
    while picks.len() < 20 {
        let mut flat = rng.random_range(0..total);
        let mut t = 0;
        while flat >= sizes[t] {
            flat -= sizes[t];
            t += 1;
        }
        if !picks.contains(&(t, flat)) {
            picks.push((t, flat));
        }
    }

    let mut analytic = Vec::with_capacity(picks.len());
    let mut numeric = Vec::with_capacity(picks.len());
    for &(t, i) in &picks {
        analytic.push(grads.tensors[t][i]);
        let orig = model.params()[t][i];
        let mut loss_at = |value: f64| {
            model.params_mut()[t][i] = value;
            let (logits, _) = model.forward_train(&x).unwrap();
            softmax_cross_entropy(logits.data(), &labels, 5)
                .unwrap()
                .loss
        };
        let plus = loss_at(orig + MODEL_STEP);
        let minus = loss_at(orig - MODEL_STEP);
        model.params_mut()[t][i] = orig;
        numeric.push((plus - minus) / (2.0 * MODEL_STEP));
    }
    Ok(result(
        "model_end_to_end",
        &analytic,
        &numeric,
        MODEL_TOLERANCE,
    ))
}

/// Every layer check plus the end-to-end check.
pub fn run_suite(seed: u64) -> Result<GradCheckReport> {
    Ok(GradCheckReport {
        results: vec![
            check_conv(seed)?,
            check_batchnorm(seed)?,
            check_relu(seed)?,
            check_maxpool(seed)?,
            check_linear(seed)?,
            check_cross_entropy(seed)?,
            check_model(seed)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_of_cubic() {
        let mut x = [2.0];
        let d = central_difference(&mut x, 0, 1e-3, |v| v[0].powi(3));
        // exact: 3x² + h² = 12.000001
        assert!((d - 12.000001).abs() < 1e-9);
        assert_eq!(x, [2.0]);
    }

    #[test]
    fn suite_passes() {
        let report = run_suite(0).unwrap();
        for r in &report.results {
            println!("{}: {:.3e} over {}", r.name, r.max_rel_error, r.checked);
        }
        assert!(report.all_passed());
    }
}
