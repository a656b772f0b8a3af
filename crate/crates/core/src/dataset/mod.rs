//! Labeled frame collections: generation, manifests, and loading.
//!
//! A dataset directory holds `manifest.jsonl` and one `frames/NNNNNN.rcub`
//! file per frame. The first manifest line is a header carrying the seed,
//! the radar configuration and the generation plan; every further line is a
//! [`ManifestEntry`].

mod frame_io;
mod input;
mod noise;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use frame_io::{frame_from_bytes, frame_to_bytes, read_frame, write_frame, HEADER_LEN};
pub use input::{batch_inputs, frame_to_input};
pub use noise::{add_noise, eval_noise_stream, NoiseSpec};

use crate::radar_sim::{
    apply_occlusion, calibrate_scene, sample_object_scene, synthesize_frame, table_clutter,
    ComplexFrame, ObjectClass, OccluderSpec, Pose, RadarConfig, SceneParams, Variant,
};
use crate::rng::{self, Purpose};
use crate::{Error, Result, NUM_CLASSES};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const FRAMES_DIR: &str = "frames";
const MANIFEST_FORMAT: &str = "radarcnn-manifest";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Frame counts per class. Occluded frames are always test-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPlan {
    pub clean_per_class: usize,
    pub train_per_class: usize,
    pub occluded_per_class: usize,
    pub scene: SceneParams,
    pub occluder: OccluderSpec,
}

impl DatasetPlan {
    /// 80 clean frames per class split 60/20, plus 40 occluded per class.
    pub fn standard() -> Self {
        Self {
            clean_per_class: 80,
            train_per_class: 60,
            occluded_per_class: 40,
            scene: SceneParams::default(),
            occluder: OccluderSpec::cardboard_box(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clean_per_class == 0 || self.train_per_class > self.clean_per_class {
            return Err(Error::Config(format!(
                "train count {} must not exceed clean count {} (> 0)",
                self.train_per_class, self.clean_per_class
            )));
        }
        self.scene.validate()?;
        self.occluder.validate()
    }

    pub fn total_frames(&self) -> usize {
        NUM_CLASSES * (self.clean_per_class + self.occluded_per_class)
    }
}

impl Default for DatasetPlan {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame_id: u64,
    pub file_path: String,
    pub class_id: u8,
    pub class_name: String,
    pub split: Split,
    pub variant: Variant,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestHeader {
    format: String,
    version: u32,
    seed: u64,
    config: RadarConfig,
    plan: DatasetPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub config: RadarConfig,
    pub plan: DatasetPlan,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_jsonl(&self) -> String {
        let header = ManifestHeader {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            seed: self.seed,
            config: self.config,
            plan: self.plan.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Manifest("empty manifest".into()))?;
        let header: ManifestHeader = serde_json::from_str(header_line)
            .map_err(|e| Error::Manifest(format!("header: {e}")))?;
        if header.format != MANIFEST_FORMAT || header.version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported manifest {} v{}",
                header.format, header.version
            )));
        }
        let entries = lines
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Manifest(format!("line {}: {e}", i + 2)))
            })
            .collect::<Result<Vec<ManifestEntry>>>()?;
        let manifest = Self {
            seed: header.seed,
            config: header.config,
            plan: header.plan,
            entries,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_jsonl()).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_jsonl(&text)
    }

    /// Unique ids, known classes, occluded frames test-only, and the
    /// per-class cell counts of the plan.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut counts = [[0usize; 3]; NUM_CLASSES];
        for e in &self.entries {
            if !seen.insert(e.frame_id) {
                return Err(Error::Manifest(format!(
                    "duplicate frame id {}",
                    e.frame_id
                )));
            }
            let class = ObjectClass::from_id(e.class_id as usize).map_err(|_| {
                Error::Manifest(format!("frame {}: class {}", e.frame_id, e.class_id))
            })?;
            if class.name() != e.class_name {
                return Err(Error::Manifest(format!(
                    "frame {}: class name {} does not match id {}",
                    e.frame_id, e.class_name, e.class_id
                )));
            }
            let cell = match (e.variant, e.split) {
                (Variant::Clean, Split::Train) => 0,
                (Variant::Clean, Split::Test) => 1,
                (Variant::Occluded, Split::Test) => 2,
                (v, s) => {
                    return Err(Error::Manifest(format!(
                        "frame {}: variant {v:?} not allowed in split {s:?}",
                        e.frame_id
                    )))
                }
            };
            counts[class.id()][cell] += 1;
        }
        let p = &self.plan;
        let expected = [
            p.train_per_class,
            p.clean_per_class - p.train_per_class,
            p.occluded_per_class,
        ];
        for (c, row) in counts.iter().enumerate() {
            if *row != expected {
                return Err(Error::Manifest(format!(
                    "class {c}: train/test/occluded counts {row:?}, expected {expected:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn select(&self, split: Option<Split>, variant: Option<Variant>) -> Vec<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| split.is_none_or(|s| e.split == s))
            .filter(|e| variant.is_none_or(|v| e.variant == v))
            .collect()
    }
}

pub fn frame_file_name(frame_id: u64) -> String {
    format!("{FRAMES_DIR}/{frame_id:06}.rcub")
}

/// Per-class train membership of the clean frames: `train[c][j]` for the
/// j-th clean frame of class c.
fn split_assignment(seed: u64, plan: &DatasetPlan) -> Vec<Vec<bool>> {
    (0..NUM_CLASSES)
        .map(|c| {
            let mut order: Vec<usize> = (0..plan.clean_per_class).collect();
            order.shuffle(&mut rng::stream(seed, Purpose::Split, c as u64));
            let mut train = vec![false; plan.clean_per_class];
            for &j in &order[..plan.train_per_class] {
                train[j] = true;
            }
            train
        })
        .collect()
}

struct FrameJob {
    frame_id: u64,
    class_id: usize,
    split: Split,
    occluded: bool,
}

fn jobs(seed: u64, plan: &DatasetPlan) -> Vec<FrameJob> {
    let train = split_assignment(seed, plan);
    let mut out = Vec::with_capacity(plan.total_frames());
    for (c, member) in train.iter().enumerate() {
        for (j, &is_train) in member.iter().enumerate() {
            out.push(FrameJob {
                frame_id: (c * plan.clean_per_class + j) as u64,
                class_id: c,
                split: if is_train { Split::Train } else { Split::Test },
                occluded: false,
            });
        }
    }
    let base = NUM_CLASSES * plan.clean_per_class;
    for c in 0..NUM_CLASSES {
        for j in 0..plan.occluded_per_class {
            out.push(FrameJob {
                frame_id: (base + c * plan.occluded_per_class + j) as u64,
                class_id: c,
                split: Split::Test,
                occluded: true,
            });
        }
    }
    out
}

/// Synthesizes one frame. Every random draw comes from streams keyed on the
/// dataset seed and the frame id.
pub fn synthesize_dataset_frame(
    seed: u64,
    config: &RadarConfig,
    plan: &DatasetPlan,
    clutter: &[crate::radar_sim::Scatterer],
    frame_id: u64,
    class_id: usize,
    occluded: bool,
) -> Result<(ComplexFrame, Pose)> {
    let mut pose_rng = rng::stream(seed, Purpose::Pose, frame_id);
    let scene = sample_object_scene(class_id, clutter, &plan.scene, &mut pose_rng)?;
    let pose = scene.pose;
    // calibrate before occlusion so both variants share one power scale
    let mut scene = calibrate_scene(&scene, config)?;
    if occluded {
        let mut occ_rng = rng::stream(seed, Purpose::Occluder, frame_id);
        scene = apply_occlusion(&scene, &plan.occluder, &mut occ_rng)?;
    }
    let mut noise_rng = rng::stream(seed, Purpose::ReceiverNoise, frame_id);
    let frame = synthesize_frame(&scene, config, frame_id, &mut noise_rng)?;
    Ok((frame, pose))
}

/// Standard-protocol dataset: 400 clean frames split 300/100, plus 200
/// occluded test frames.
pub fn generate_dataset(
    out_dir: &Path,
    seed: u64,
    config: &RadarConfig,
) -> Result<DatasetManifest> {
    generate_dataset_with(out_dir, seed, config, &DatasetPlan::standard())
}

pub fn generate_dataset_with(
    out_dir: &Path,
    seed: u64,
    config: &RadarConfig,
    plan: &DatasetPlan,
) -> Result<DatasetManifest> {
    config.validate()?;
    plan.validate()?;
    let frames_dir = out_dir.join(FRAMES_DIR);
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let clutter = table_clutter(seed, &plan.scene);

    let entries = jobs(seed, plan)
        .into_par_iter()
        .map(|job| {
            let (frame, pose) = synthesize_dataset_frame(
                seed,
                config,
                plan,
                &clutter,
                job.frame_id,
                job.class_id,
                job.occluded,
            )?;
            let file_path = frame_file_name(job.frame_id);
            write_frame(&frame, &out_dir.join(&file_path))?;
            Ok(ManifestEntry {
                frame_id: job.frame_id,
                file_path,
                class_id: job.class_id as u8,
                class_name: ObjectClass::from_id(job.class_id)?.name().to_string(),
                split: job.split,
                variant: frame.variant,
                pose,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        seed,
        config: *config,
        plan: plan.clone(),
        entries,
    };
    manifest.validate()?;
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// A manifest together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        Ok(Self {
            root: root.to_path_buf(),
            manifest: DatasetManifest::load(root)?,
        })
    }

    /// Reads one frame and checks it against its manifest entry.
    pub fn read(&self, entry: &ManifestEntry) -> Result<ComplexFrame> {
        let frame = read_frame(&self.root.join(&entry.file_path))?;
        let c = &self.manifest.config;
        if frame.frame_id != entry.frame_id
            || frame.class_id != entry.class_id
            || frame.variant != entry.variant
            || frame.shape() != (c.tx_count, c.rx_count, c.samples)
        {
            return Err(Error::Manifest(format!(
                "{} does not match its manifest entry",
                entry.file_path
            )));
        }
        Ok(frame)
    }

    /// Reads frames in parallel, preserving order.
    pub fn read_all(&self, entries: &[&ManifestEntry]) -> Result<Vec<ComplexFrame>> {
        entries.par_iter().map(|e| self.read(e)).collect()
    }
}

/// Mean per-component power (real, imaginary) over a set of frames.
pub fn mean_component_power(frames: &[ComplexFrame]) -> (f64, f64) {
    if frames.is_empty() {
        return (0.0, 0.0);
    }
    let n = frames.len() as f64;
    let re = frames
        .iter()
        .map(ComplexFrame::mean_power_real)
        .sum::<f64>()
        / n;
    let im = frames
        .iter()
        .map(ComplexFrame::mean_power_imag)
        .sum::<f64>()
        / n;
    (re, im)
}
