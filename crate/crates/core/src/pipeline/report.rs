//! Machine-readable run reports: JSON, sweep CSV, and text matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::eval::{ConfusionMatrix, SweepResult};
use super::train::EpochLog;
use crate::nn::InputMode;
use crate::{Error, Result};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "sweep.csv";
pub const REPORT_TEXT: &str = "confusion.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub name: String,
    pub input_mode: InputMode,
    /// Percent; equals `100·trace/total` of `confusion`.
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    pub fn new(name: impl Into<String>, input_mode: InputMode, confusion: ConfusionMatrix) -> Self {
        Self {
            name: name.into(),
            input_mode,
            accuracy: confusion.accuracy(),
            confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub input_mode: InputMode,
    pub epochs: Vec<EpochLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// SHA-256 of the compact JSON encoding of `run`.
    pub config_hash: String,
    /// Resolved configuration and seeds of the run.
    pub run: serde_json::Value,
    /// Mean (real, imaginary) per-component power of the evaluated clean frames.
    pub mean_power: Option<[f64; 2]>,
    pub training: Vec<TrainingLog>,
    pub evaluations: Vec<Evaluation>,
    pub sweeps: Vec<SweepResult>,
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn config_hash(run: &serde_json::Value) -> String {
    sha256_hex(&serde_json::to_vec(run).expect("JSON value serializes"))
}

impl Report {
    pub fn new(run: serde_json::Value) -> Self {
        Self {
            config_hash: config_hash(&run),
            run,
            mean_power: None,
            training: Vec::new(),
            evaluations: Vec::new(),
            sweeps: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Manifest(format!("report: {e}")))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.evaluations {
            let _ = writeln!(s, "== {} ({}) ==", e.name, e.input_mode);
            s.push_str(&e.confusion.to_text());
            s.push('\n');
        }
        for sw in &self.sweeps {
            for p in &sw.points {
                let _ = writeln!(
                    s,
                    "== noise sweep ({}) sigma2 = {} ==",
                    sw.input_mode, p.sigma2
                );
                s.push_str(&p.confusion.to_text());
                s.push('\n');
            }
        }
        s
    }
}

/// `sigma2,accuracy_real,accuracy_imag,accuracy_complex`; columns of modes
/// without a sweep stay empty. All sweeps must share one σ² grid.
pub fn sweep_csv(sweeps: &[SweepResult]) -> Result<String> {
    let first = sweeps
        .first()
        .ok_or_else(|| Error::InvalidArgument("no sweep results".into()))?;
    let grid: Vec<f64> = first.points.iter().map(|p| p.sigma2).collect();
    let mut columns: [Option<&SweepResult>; 3] = [None; 3];
    for sw in sweeps {
        let g: Vec<f64> = sw.points.iter().map(|p| p.sigma2).collect();
        if g != grid {
            return Err(Error::InvalidArgument(
                "sweeps use different σ² grids".into(),
            ));
        }
        let slot = &mut columns[sw.input_mode.code() as usize];
        if slot.is_some() {
            return Err(Error::InvalidArgument(format!(
                "two sweeps for {} input",
                sw.input_mode
            )));
        }
        *slot = Some(sw);
    }
    let mut s = String::from("sigma2,accuracy_real,accuracy_imag,accuracy_complex\n");
    for (i, sigma2) in grid.iter().enumerate() {
        s.push_str(&sigma2.to_string());
        for col in &columns {
            s.push(',');
            if let Some(sw) = col {
                s.push_str(&sw.points[i].accuracy.to_string());
            }
        }
        s.push('\n');
    }
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_sweep_csv(sweeps: &[SweepResult], path: &Path) -> Result<()> {
    write(path, &sweep_csv(sweeps)?)
}

/// Writes `report.json`, `confusion.txt`, and, when sweeps are present,
/// `sweep.csv` into `dir`. Returns the written paths.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![dir.join(REPORT_JSON), dir.join(REPORT_TEXT)];
    write(&written[0], &report.to_json())?;
    write(&written[1], &report.to_text())?;
    if !report.sweeps.is_empty() {
        let csv = dir.join(REPORT_CSV);
        write_sweep_csv(&report.sweeps, &csv)?;
        written.push(csv);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::eval::SweepPoint;
    use super::*;

    fn sweep(mode: InputMode, grid: &[f64]) -> SweepResult {
        SweepResult {
            input_mode: mode,
            noise_seed: 1,
            points: grid
                .iter()
                .map(|&s| SweepPoint {
                    sigma2: s,
                    accuracy: 50.0,
                    confusion: ConfusionMatrix::default(),
                })
                .collect(),
        }
    }

    #[test]
    fn csv_single_point() {
        let csv = sweep_csv(&[sweep(InputMode::Imag, &[0.0])]).unwrap();
        assert_eq!(
            csv,
            "sigma2,accuracy_real,accuracy_imag,accuracy_complex\n0,,50,\n"
        );
    }

    #[test]
    fn csv_rejects_mismatched_grids() {
        let a = sweep(InputMode::Real, &[0.0, 1e-6]);
        let b = sweep(InputMode::Imag, &[0.0]);
        assert!(sweep_csv(&[a.clone(), b]).is_err());
        assert!(sweep_csv(&[a.clone(), a]).is_err());
        assert!(sweep_csv(&[]).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = serde_json::json!({"seed": 42, "mode": "real"});
        let b = serde_json::json!({"mode": "real", "seed": 42});
        let c = serde_json::json!({"seed": 43, "mode": "real"});
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn json_round_trip() {
        let truth: Vec<usize> = vec![0, 1, 2, 3, 4, 4];
        let m = ConfusionMatrix::from_pairs(&truth, &[0, 1, 2, 3, 4, 0]).unwrap();
        let mut r = Report::new(serde_json::json!({"seed": 1}));
        r.evaluations
            .push(Evaluation::new("test-clean", InputMode::Real, m));
        r.sweeps.push(sweep(InputMode::Real, &[0.0, 1e-6]));
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
