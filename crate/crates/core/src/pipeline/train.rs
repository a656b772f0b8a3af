//! Mini-batch training on the clean training split.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{batch_inputs, Dataset, Split};
use crate::nn::{InputMode, RadarCnnModel};
use crate::radar_sim::{ComplexFrame, Variant};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub input_mode: InputMode,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Stop once training accuracy has been 100% for this many consecutive
    /// epochs. Zero disables early stopping.
    pub early_stop_epochs: usize,
}

impl TrainConfig {
    /// Batch 16, learning rate 1e-3, 30 epochs, early stop after 3 perfect epochs.
    pub fn standard(input_mode: InputMode, seed: u64) -> Self {
        Self {
            input_mode,
            batch_size: 16,
            lr: 1e-3,
            epochs: 30,
            seed,
            early_stop_epochs: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch size must be at least 2, got {}",
                self.batch_size
            )));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be > 0",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Sample-weighted mean training loss.
    pub loss: f64,
    /// Training accuracy in percent, measured on the batches as they were
    /// fed (before each update).
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RadarCnnModel,
    pub log: Vec<EpochLog>,
}

/// Batch boundaries of one epoch. A trailing batch of one item is merged
/// into its predecessor because batch statistics need two samples.
pub fn batch_ranges(n: usize, batch_size: usize) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<_> = (0..n)
        .step_by(batch_size)
        .map(|s| s..(s + batch_size).min(n))
        .collect();
    if out.len() >= 2 && out.last().is_some_and(|r| r.len() == 1) {
        let last = out.pop().unwrap();
        out.last_mut().unwrap().end = last.end;
    }
    out
}

/// Trains a fresh model on every clean training frame of the dataset.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(dataset, config, |_| {})
}

pub fn train_with_progress(
    dataset: &Dataset,
    config: &TrainConfig,
    progress: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    let entries = dataset
        .manifest
        .select(Some(Split::Train), Some(Variant::Clean));
    let frames = dataset.read_all(&entries)?;
    train_frames(&frames, config, progress)
}

/// Trains on in-memory frames; labels are taken from `class_id`.
pub fn train_frames(
    frames: &[ComplexFrame],
    config: &TrainConfig,
    mut progress: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    config.validate()?;
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 2 frames, found {}",
            frames.len()
        )));
    }
    if let Some(f) = frames.iter().find(|f| f.variant != Variant::Clean) {
        return Err(Error::InvalidArgument(format!(
            "frame {} is {:?}; training uses clean frames only",
            f.frame_id, f.variant
        )));
    }
    let (tx, rx, samples) = frames[0].shape();
    let mut model = RadarCnnModel::new(config.input_mode, tx * rx, samples, config.seed)?;
    let mut log = Vec::with_capacity(config.epochs);
    let mut perfect_streak = 0;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..frames.len()).collect();
        order.shuffle(&mut rng::stream(
            config.seed,
            Purpose::Shuffle,
            epoch as u64,
        ));
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for range in batch_ranges(order.len(), config.batch_size) {
            let batch: Vec<&ComplexFrame> = order[range].iter().map(|&i| &frames[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|f| f.class_id as usize).collect();
            let x = batch_inputs(&batch, config.input_mode)?;
            let stats = model.train_step(&x, &labels, config.lr)?;
            loss_sum += stats.loss * batch.len() as f64;
            correct += stats.correct;
        }
        let entry = EpochLog {
            epoch: epoch + 1,
            loss: loss_sum / frames.len() as f64,
            accuracy: 100.0 * correct as f64 / frames.len() as f64,
        };
        progress(&entry);
        perfect_streak = if correct == frames.len() {
            perfect_streak + 1
        } else {
            0
        };
        log.push(entry);
        if config.early_stop_epochs > 0 && perfect_streak >= config.early_stop_epochs {
            break;
        }
    }
    Ok(TrainOutcome { model, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_ranges_keep_partial_batch() {
        let r = batch_ranges(300, 16);
        assert_eq!(r.len(), 19);
        assert_eq!(r.last().unwrap().len(), 12);
        assert_eq!(r.iter().map(|r| r.len()).sum::<usize>(), 300);
    }

    #[test]
    fn singleton_tail_is_merged() {
        let r = batch_ranges(33, 16);
        assert_eq!(r, vec![0..16, 16..33]);
        assert_eq!(batch_ranges(3, 2), vec![0..3]);
        assert_eq!(batch_ranges(2, 16), vec![0..2]);
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::standard(InputMode::Real, 1);
        assert!(c.validate().is_ok());
        c.batch_size = 1;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::standard(InputMode::Real, 1);
        c.epochs = 0;
        assert!(c.validate().is_err());
        c.epochs = 1;
        c.lr = -1.0;
        assert!(c.validate().is_err());
    }
}
