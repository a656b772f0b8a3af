use super::tensor::Scalar;
use crate::{Error, Result};

/// Mean softmax cross-entropy over a batch.
#[derive(Debug, Clone)]
pub struct CrossEntropy<T> {
    /// Mean of `per_item`.
    pub loss: T,
    pub per_item: Vec<T>,
    /// Softmax probabilities, row per item.
    pub probs: Vec<T>,
    /// `∂loss/∂logits = (ŷ − onehot(label)) / batch`.
    pub grad_logits: Vec<T>,
}

/// `logits` holds `labels.len()` rows of `classes` values.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &[T],
    labels: &[usize],
    classes: usize,
) -> Result<CrossEntropy<T>> {
    if classes == 0 || logits.len() != labels.len() * classes {
        return Err(Error::Shape(format!(
            "{} logits for {} labels of {classes} classes",
            logits.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range 0..{classes}"
        )));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("logits".into()));
    }
    let batch = labels.len();
    let mut per_item = Vec::with_capacity(batch);
    let mut probs = Vec::with_capacity(logits.len());
    let mut grad_logits = Vec::with_capacity(logits.len());
    let inv_b = 1.0 / batch as f64;
    for (row, &label) in logits.chunks_exact(classes).zip(labels) {
        let z: Vec<f64> = row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let log_norm = max + sum_exp.ln();
        per_item.push(T::of(log_norm - z[label]));
        for (j, &v) in z.iter().enumerate() {
            let p = (v - log_norm).exp();
            probs.push(T::of(p));
            let y = if j == label { 1.0 } else { 0.0 };
            grad_logits.push(T::of((p - y) * inv_b));
        }
    }
    let loss = T::of(
        per_item
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .sum::<f64>()
            * inv_b,
    );
    Ok(CrossEntropy {
        loss,
        per_item,
        probs,
        grad_logits,
    })
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}
