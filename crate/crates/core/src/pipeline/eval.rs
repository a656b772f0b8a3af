//! Confusion matrices, evaluation, and the noise sweep.

use serde::{Deserialize, Serialize};

use crate::dataset::{add_noise, batch_inputs, eval_noise_stream, Dataset, NoiseSpec, Split};
use crate::nn::{InputMode, RadarCnnModel};
use crate::radar_sim::{ComplexFrame, Variant};
use crate::{Error, Result, CLASS_NAMES, NUM_CLASSES};

/// Frames per inference batch. Eval-mode outputs do not depend on it.
pub const EVAL_BATCH: usize = 16;

/// Rows are true labels, columns predictions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_pairs(truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!(
                "{} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= NUM_CLASSES || p >= NUM_CLASSES {
                return Err(Error::InvalidArgument(format!(
                    "class pair ({t}, {p}) out of range"
                )));
            }
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> [u64; NUM_CLASSES] {
        self.counts.map(|row| row.iter().sum())
    }

    /// Overall accuracy in percent, `100·trace/total`.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        100.0 * self.correct() as f64 / total as f64
    }

    /// Row-normalized percentages; empty rows stay zero.
    pub fn row_percentages(&self) -> [[f64; NUM_CLASSES]; NUM_CLASSES] {
        let sums = self.row_sums();
        let mut out = [[0.0; NUM_CLASSES]; NUM_CLASSES];
        for (i, row) in self.counts.iter().enumerate() {
            if sums[i] > 0 {
                for (j, &c) in row.iter().enumerate() {
                    out[i][j] = 100.0 * c as f64 / sums[i] as f64;
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = CLASS_NAMES
            .iter()
            .map(|n| n.len())
            .max()
            .unwrap_or(0)
            .max(7);
        let mut s = format!("{:>width$} |", "true\\pred");
        for name in CLASS_NAMES {
            s.push_str(&format!(" {name:>width$}"));
        }
        s.push('\n');
        s.push_str(&"-".repeat(width + 2 + (width + 1) * NUM_CLASSES));
        s.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            s.push_str(&format!("{:>width$} |", CLASS_NAMES[i]));
            for c in row {
                s.push_str(&format!(" {c:>width$}"));
            }
            s.push('\n');
        }
        s.push_str(&format!(
            "overall accuracy: {:.2}% ({}/{})\n",
            self.accuracy(),
            self.correct(),
            self.total()
        ));
        s
    }
}

/// Which manifest entries an evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selector {
    pub split: Option<Split>,
    pub variant: Option<Variant>,
}

impl Selector {
    pub const TEST_CLEAN: Selector = Selector {
        split: Some(Split::Test),
        variant: Some(Variant::Clean),
    };
    pub const OCCLUDED: Selector = Selector {
        split: Some(Split::Test),
        variant: Some(Variant::Occluded),
    };
}

/// Receiver noise added at evaluation time. Frame `id` always draws from
/// the same stream, whatever σ² is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalNoise {
    pub spec: NoiseSpec,
    pub seed: u64,
}

/// Errors unless the model was trained for `mode`.
pub fn check_mode(model: &RadarCnnModel, mode: InputMode) -> Result<()> {
    if model.input_mode != mode {
        return Err(Error::InvalidArgument(format!(
            "model expects {} input, {} requested",
            model.input_mode, mode
        )));
    }
    Ok(())
}

/// Eval-mode predictions for in-memory frames.
pub fn predict_frames(
    model: &RadarCnnModel,
    frames: &[ComplexFrame],
    noise: Option<EvalNoise>,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(frames.len());
    for chunk in frames.chunks(EVAL_BATCH) {
        let noisy: Vec<ComplexFrame>;
        let batch: Vec<&ComplexFrame> = match noise {
            Some(n) => {
                noisy = chunk
                    .iter()
                    .map(|f| add_noise(f, n.spec, &mut eval_noise_stream(n.seed, f.frame_id)))
                    .collect();
                noisy.iter().collect()
            }
            None => chunk.iter().collect(),
        };
        let x = batch_inputs(&batch, model.input_mode)?;
        out.extend(model.classify(&x)?);
    }
    Ok(out)
}

pub fn evaluate_frames(
    model: &RadarCnnModel,
    frames: &[ComplexFrame],
    noise: Option<EvalNoise>,
) -> Result<ConfusionMatrix> {
    let predicted = predict_frames(model, frames, noise)?;
    let truth: Vec<usize> = frames.iter().map(|f| f.class_id as usize).collect();
    ConfusionMatrix::from_pairs(&truth, &predicted)
}

pub fn evaluate(
    model: &RadarCnnModel,
    dataset: &Dataset,
    selector: Selector,
    noise: Option<EvalNoise>,
) -> Result<ConfusionMatrix> {
    let entries = dataset.manifest.select(selector.split, selector.variant);
    if entries.is_empty() {
        return Err(Error::Manifest(format!("no frames match {selector:?}")));
    }
    let frames = dataset.read_all(&entries)?;
    evaluate_frames(model, &frames, noise)
}

/// All occluded test frames, no retraining.
pub fn evaluate_occluded(model: &RadarCnnModel, dataset: &Dataset) -> Result<ConfusionMatrix> {
    evaluate(model, dataset, Selector::OCCLUDED, None)
}

/// σ² grid of the reference noise experiment.
pub const DEFAULT_SIGMA2: [f64; 6] = [0.0, 1e-6, 4e-6, 9e-6, 1.6e-5, 2.5e-5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sigma2: f64,
    /// Percent.
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub input_mode: InputMode,
    pub noise_seed: u64,
    pub points: Vec<SweepPoint>,
}

pub fn validate_sigma2_list(sigma2: &[f64]) -> Result<()> {
    if sigma2.is_empty() {
        return Err(Error::InvalidArgument("empty σ² list".into()));
    }
    for s in sigma2 {
        NoiseSpec::new(*s)?;
    }
    if sigma2.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "σ² values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Clean test frames under each σ².
pub fn sweep_frames(
    model: &RadarCnnModel,
    frames: &[ComplexFrame],
    sigma2: &[f64],
    noise_seed: u64,
) -> Result<SweepResult> {
    validate_sigma2_list(sigma2)?;
    let points = sigma2
        .iter()
        .map(|&s| {
            let noise = EvalNoise {
                spec: NoiseSpec::new(s)?,
                seed: noise_seed,
            };
            let confusion = evaluate_frames(model, frames, Some(noise))?;
            Ok(SweepPoint {
                sigma2: s,
                accuracy: confusion.accuracy(),
                confusion,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        input_mode: model.input_mode,
        noise_seed,
        points,
    })
}

pub fn sweep_noise(
    model: &RadarCnnModel,
    dataset: &Dataset,
    sigma2: &[f64],
    noise_seed: u64,
) -> Result<SweepResult> {
    validate_sigma2_list(sigma2)?;
    let entries = dataset
        .manifest
        .select(Selector::TEST_CLEAN.split, Selector::TEST_CLEAN.variant);
    if entries.is_empty() {
        return Err(Error::Manifest("no clean test frames".into()));
    }
    let frames = dataset.read_all(&entries)?;
    sweep_frames(model, &frames, sigma2, noise_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matrix_is_perfect() {
        let truth: Vec<usize> = (0..100).map(|i| i / 20).collect();
        let m = ConfusionMatrix::from_pairs(&truth, &truth).unwrap();
        assert_eq!(m.accuracy(), 100.0);
        assert_eq!(m.row_sums(), [20; 5]);
        for i in 0..5 {
            assert_eq!(m.row_percentages()[i][i], 100.0);
        }
    }

    #[test]
    fn accuracy_is_trace_over_total() {
        let m =
            ConfusionMatrix::from_pairs(&[0, 0, 1, 2, 3, 4, 4], &[0, 3, 1, 1, 3, 4, 0]).unwrap();
        assert_eq!(m.correct(), 4);
        assert_eq!(m.total(), 7);
        assert_eq!(m.accuracy(), 400.0 / 7.0);
        assert_eq!(m.row_percentages()[0], [50.0, 0.0, 0.0, 50.0, 0.0]);
        assert!(m.to_text().contains("57.14%"));
    }

    #[test]
    fn rejects_bad_pairs() {
        assert!(ConfusionMatrix::from_pairs(&[0, 1], &[0]).is_err());
        assert!(ConfusionMatrix::from_pairs(&[5], &[0]).is_err());
    }

    #[test]
    fn sigma2_list_validation() {
        assert!(validate_sigma2_list(&DEFAULT_SIGMA2).is_ok());
        assert!(validate_sigma2_list(&[]).is_err());
        assert!(validate_sigma2_list(&[1e-6, 1e-6]).is_err());
        assert!(validate_sigma2_list(&[2e-6, 1e-6]).is_err());
        assert!(validate_sigma2_list(&[-1e-6]).is_err());
    }
}
