//! Object templates, poses, table clutter and the cardboard occluder.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Point3, Scatterer};
use crate::rng::{self, Purpose};
use crate::{Error, Result, CLASS_NAMES, NUM_CLASSES};

/// Base center of an object at identity pose. The array sits at the origin
/// looking along +z; objects stand on a table below it, so an object's
/// height axis points towards the array (−z).
pub const NOMINAL_ANCHOR: Point3 = [0.0, 0.0, 0.55];

/// Table surface plane carrying the static clutter.
const TABLE_Z: f64 = 0.60;

/// Randomization of object placement and the static background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    /// Yaw is uniform on `[0, yaw_span)` (radians).
    pub yaw_span: f64,
    /// Tilt is uniform on `±max_tilt` (radians).
    pub max_tilt: f64,
    /// Anchor offset along x and y is uniform on `±max_lateral_offset` (meters).
    pub max_lateral_offset: f64,
    /// Anchor offset along z (towards the array) is uniform on `±max_range_offset`.
    pub max_range_offset: f64,
    pub clutter_count: usize,
    /// Clutter magnitudes are uniform on `[0.5, 1)·clutter_level`.
    pub clutter_level: f64,
    pub clutter_half_extent: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            yaw_span: 2.0 * PI,
            max_tilt: 5.0 * PI / 180.0,
            max_lateral_offset: 0.01,
            max_range_offset: 0.005,
            clutter_count: 30,
            clutter_level: 1.0e-3,
            clutter_half_extent: 0.25,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.yaw_span,
            self.max_tilt,
            self.max_lateral_offset,
            self.max_range_offset,
            self.clutter_level,
            self.clutter_half_extent,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0);
        if !ok || self.max_tilt >= PI / 2.0 {
            return Err(Error::Config(format!("invalid scene parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Cup = 0,
    Charger = 1,
    Mouse = 2,
    Gum = 3,
    Bottle = 4,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; NUM_CLASSES] = [
        ObjectClass::Cup,
        ObjectClass::Charger,
        ObjectClass::Mouse,
        ObjectClass::Gum,
        ObjectClass::Bottle,
    ];

    pub fn from_id(class_id: usize) -> Result<Self> {
        Self::ALL
            .get(class_id)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown class id {class_id}")))
    }

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        CLASS_NAMES[self.id()]
    }

    /// Relative reflectivity weight of every template point.
    pub fn weight(self) -> f64 {
        match self {
            ObjectClass::Cup => 1.0,
            ObjectClass::Charger => 1.2,
            ObjectClass::Mouse => 0.6,
            ObjectClass::Gum => 0.4,
            ObjectClass::Bottle => 1.5,
        }
    }

    /// Template points in the object frame `(u, v, h)`, `h` measured up from
    /// the base.
    fn local_points(self) -> Vec<Point3> {
        match self {
            ObjectClass::Cup => {
                let mut pts = cylinder_rings(0.04, &[0.0, 0.05, 0.10], 8);
                // handle
                pts.push([0.06, 0.0, 0.05]);
                pts
            }
            ObjectClass::Charger => {
                let (a, b, c) = (0.05, 0.025, 0.03);
                let mut pts = box_corners(a, b, c);
                // face centers
                pts.extend_from_slice(&[
                    [a, 0.0, c / 2.0],
                    [-a, 0.0, c / 2.0],
                    [0.0, b, c / 2.0],
                    [0.0, -b, c / 2.0],
                    [0.0, 0.0, 0.0],
                    [0.0, 0.0, c],
                ]);
                // connector and label on the top face
                pts.push([a / 2.0, 0.0, c]);
                pts.push([-a / 2.0, 0.0, c]);
                pts
            }
            ObjectClass::Mouse => ellipsoid_shell(0.05, 0.03, 0.02, 12),
            ObjectClass::Gum => box_corners(0.035, 0.01, 0.02),
            ObjectClass::Bottle => {
                let h = 0.20;
                cylinder_rings(0.03, &[0.0, h / 3.0, 2.0 * h / 3.0, h], 5)
            }
        }
    }
}

fn cylinder_rings(radius: f64, heights: &[f64], per_ring: usize) -> Vec<Point3> {
    let mut pts = Vec::with_capacity(heights.len() * per_ring);
    for (ring, &h) in heights.iter().enumerate() {
        // stagger alternate rings by half a step
        let shift = if ring % 2 == 1 {
            PI / per_ring as f64
        } else {
            0.0
        };
        for k in 0..per_ring {
            let a = 2.0 * PI * k as f64 / per_ring as f64 + shift;
            pts.push([radius * a.cos(), radius * a.sin(), h]);
        }
    }
    pts
}

/// Corners of a box with half-extents `a`, `b` standing on `h = 0` with height `c`.
fn box_corners(a: f64, b: f64, c: f64) -> Vec<Point3> {
    let mut pts = Vec::with_capacity(8);
    for h in [0.0, c] {
        for u in [-a, a] {
            for v in [-b, b] {
                pts.push([u, v, h]);
            }
        }
    }
    pts
}

/// Fibonacci lattice on an ellipsoid with semi-axes `(a, b, c)` resting on `h = 0`.
fn ellipsoid_shell(a: f64, b: f64, c: f64, count: usize) -> Vec<Point3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [a * r * phi.cos(), b * r * phi.sin(), c * (1.0 + z)]
        })
        .collect()
}

/// Object placement relative to the nominal anchor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    /// Rotation about the object's vertical axis (radians).
    pub yaw: f64,
    /// Rotation about the horizontal x axis (radians).
    pub tilt: f64,
    /// Translation of the anchor (meters).
    pub offset: Point3,
}

impl Pose {
    /// Maps a point given relative to the anchor.
    fn transform(&self, rel: Point3) -> Point3 {
        let (sy, cy) = self.yaw.sin_cos();
        let (st, ct) = self.tilt.sin_cos();
        // yaw about z
        let x1 = cy * rel[0] - sy * rel[1];
        let y1 = sy * rel[0] + cy * rel[1];
        let z1 = rel[2];
        // tilt about x
        let y2 = ct * y1 - st * z1;
        let z2 = st * y1 + ct * z1;
        [
            NOMINAL_ANCHOR[0] + self.offset[0] + x1,
            NOMINAL_ANCHOR[1] + self.offset[1] + y2,
            NOMINAL_ANCHOR[2] + self.offset[2] + z2,
        ]
    }

    fn is_identity(&self) -> bool {
        self.yaw == 0.0 && self.tilt == 0.0 && self.offset == [0.0; 3]
    }
}

/// Template scatterers of a class at identity pose, in world coordinates.
pub fn object_template(class: ObjectClass) -> Vec<Scatterer> {
    let w = class.weight();
    class
        .local_points()
        .into_iter()
        .map(|[u, v, h]| {
            let p = [
                NOMINAL_ANCHOR[0] + u,
                NOMINAL_ANCHOR[1] + v,
                NOMINAL_ANCHOR[2] - h,
            ];
            Scatterer::real(p, w)
        })
        .collect()
}

/// Cardboard box over the object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccluderSpec {
    /// Amplitude factor applied to every object scatterer (two-way).
    pub attenuation: f64,
    /// Reflections from the box's front face.
    pub face_scatterers: Vec<Scatterer>,
    /// Standard deviation of the per-scatterer phase perturbation (radians).
    pub phase_jitter_std: f64,
}

impl Default for OccluderSpec {
    fn default() -> Self {
        Self::cardboard_box()
    }
}

impl OccluderSpec {
    /// Front-face plane of the default box.
    pub const FACE_Z: f64 = 0.28;
    pub const FACE_AMPLITUDE: f64 = 1.0e-3;

    /// 0.5 amplitude attenuation, 0.2 rad phase jitter, and a weak 5×5 grid
    /// of face reflections spanning 24 cm.
    pub fn cardboard_box() -> Self {
        let mut face = Vec::with_capacity(25);
        for i in 0..5 {
            for j in 0..5 {
                let x = -0.12 + 0.06 * i as f64;
                let y = -0.12 + 0.06 * j as f64;
                face.push(Scatterer::real([x, y, Self::FACE_Z], Self::FACE_AMPLITUDE));
            }
        }
        Self {
            attenuation: 0.5,
            face_scatterers: face,
            phase_jitter_std: 0.2,
        }
    }

    /// Attenuation 1, no jitter, no face.
    pub fn transparent() -> Self {
        Self {
            attenuation: 1.0,
            face_scatterers: Vec::new(),
            phase_jitter_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation > 0.0 && self.attenuation <= 1.0) {
            return Err(Error::Config(format!(
                "occluder attenuation must lie in (0, 1], got {}",
                self.attenuation
            )));
        }
        if !(self.phase_jitter_std.is_finite() && self.phase_jitter_std >= 0.0) {
            return Err(Error::Config(
                "phase jitter std must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A parametric scene: one object, static clutter and optionally an occluder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub class_id: usize,
    pub scatterers: Vec<Scatterer>,
    pub clutter: Vec<Scatterer>,
    pub occluder: Option<OccluderSpec>,
    pub pose: Pose,
    /// Set once object amplitudes carry the power calibration gain.
    pub calibrated: bool,
}

impl SceneSpec {
    pub fn empty(class_id: usize) -> Self {
        Self {
            class_id,
            scatterers: Vec::new(),
            clutter: Vec::new(),
            occluder: None,
            pose: Pose::default(),
            calibrated: false,
        }
    }

    /// Every scatterer that contributes to the received signal.
    pub fn all_scatterers(&self) -> impl Iterator<Item = &Scatterer> {
        let face = self
            .occluder
            .as_ref()
            .map(|o| o.face_scatterers.as_slice())
            .unwrap_or(&[]);
        self.scatterers.iter().chain(&self.clutter).chain(face)
    }
}

/// Fixed table clutter of a dataset; depends on the dataset seed only.
pub fn table_clutter(seed: u64, params: &SceneParams) -> Vec<Scatterer> {
    let mut rng = rng::stream(seed, Purpose::Clutter, 0);
    let e = params.clutter_half_extent;
    (0..params.clutter_count)
        .map(|_| {
            let x = if e > 0.0 {
                rng.random_range(-e..e)
            } else {
                0.0
            };
            let y = if e > 0.0 {
                rng.random_range(-e..e)
            } else {
                0.0
            };
            let mag = params.clutter_level * rng.random_range(0.5..1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            Scatterer::new([x, y, TABLE_Z], Complex64::from_polar(mag, phase))
        })
        .collect()
}

/// Draws a pose and places the class template accordingly.
///
/// Ranges are given by `params`; every component is drawn even when its
/// range is zero, so the stream layout does not depend on the parameters.
pub fn sample_object_scene<R: Rng + ?Sized>(
    class_id: usize,
    clutter: &[Scatterer],
    params: &SceneParams,
    pose_rng: &mut R,
) -> Result<SceneSpec> {
    let class = ObjectClass::from_id(class_id)?;
    let mut unit = || pose_rng.random::<f64>();
    let yaw = params.yaw_span * unit();
    let tilt = params.max_tilt * (2.0 * unit() - 1.0);
    let offset = [
        params.max_lateral_offset * (2.0 * unit() - 1.0),
        params.max_lateral_offset * (2.0 * unit() - 1.0),
        params.max_range_offset * (2.0 * unit() - 1.0),
    ];
    let pose = Pose { yaw, tilt, offset };
    Ok(place_object(class, pose, clutter))
}

/// Scene with the class template at the given pose.
pub fn place_object(class: ObjectClass, pose: Pose, clutter: &[Scatterer]) -> SceneSpec {
    let template = object_template(class);
    let scatterers = if pose.is_identity() {
        template
    } else {
        template
            .into_iter()
            .map(|s| {
                let rel = [
                    s.position[0] - NOMINAL_ANCHOR[0],
                    s.position[1] - NOMINAL_ANCHOR[1],
                    s.position[2] - NOMINAL_ANCHOR[2],
                ];
                Scatterer::new(pose.transform(rel), s.amplitude)
            })
            .collect()
    };
    SceneSpec {
        class_id: class.id(),
        scatterers,
        clutter: clutter.to_vec(),
        occluder: None,
        pose,
        calibrated: false,
    }
}

/// Covers the object with an occluder: object amplitudes are attenuated and
/// phase-perturbed, the box face is added, clutter stays as it is.
///
/// Calibrate the scene first if the occluded frame should share the clean
/// frame's power scale.
pub fn apply_occlusion<R: Rng + ?Sized>(
    scene: &SceneSpec,
    occluder: &OccluderSpec,
    rng_stream: &mut R,
) -> Result<SceneSpec> {
    if scene.occluder.is_some() {
        return Err(Error::InvalidArgument("scene is already occluded".into()));
    }
    occluder.validate()?;
    let mut out = scene.clone();
    if occluder.phase_jitter_std > 0.0 {
        let jitter = Normal::new(0.0, occluder.phase_jitter_std)
            .map_err(|e| Error::Config(e.to_string()))?;
        for s in &mut out.scatterers {
            let phi: f64 = jitter.sample(rng_stream);
            s.amplitude *= Complex64::from_polar(occluder.attenuation, phi);
        }
    } else {
        for s in &mut out.scatterers {
            s.amplitude = s.amplitude.scale(occluder.attenuation);
        }
    }
    out.occluder = Some(occluder.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(i: u64) -> rand_chacha::ChaCha8Rng {
        rng::stream(1, Purpose::Pose, i)
    }

    #[test]
    fn template_counts() {
        let counts: Vec<usize> = ObjectClass::ALL
            .iter()
            .map(|&c| object_template(c).len())
            .collect();
        assert_eq!(counts, vec![25, 16, 12, 8, 20]);
    }

    #[test]
    fn bottle_count_is_pose_independent() {
        let clutter = table_clutter(3, &SceneParams::default());
        for i in 0..10 {
            let scene =
                sample_object_scene(4, &clutter, &SceneParams::default(), &mut rng(i)).unwrap();
            assert_eq!(scene.scatterers.len(), 20);
            assert_eq!(scene.clutter.len(), 30);
        }
    }

    #[test]
    fn identity_pose_gives_template() {
        for class in ObjectClass::ALL {
            let scene = place_object(class, Pose::default(), &[]);
            assert_eq!(scene.scatterers, object_template(class));
        }
    }

    #[test]
    fn pose_preserves_rigid_distances() {
        let clutter = table_clutter(0, &SceneParams::default());
        let scene = sample_object_scene(0, &clutter, &SceneParams::default(), &mut rng(5)).unwrap();
        let tmpl = object_template(ObjectClass::Cup);
        for i in 0..tmpl.len() {
            for j in 0..tmpl.len() {
                let a = super::super::distance(&tmpl[i].position, &tmpl[j].position);
                let b = super::super::distance(
                    &scene.scatterers[i].position,
                    &scene.scatterers[j].position,
                );
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_class_same_amplitudes_different_positions() {
        let clutter = table_clutter(0, &SceneParams::default());
        let a = sample_object_scene(1, &clutter, &SceneParams::default(), &mut rng(1)).unwrap();
        let b = sample_object_scene(1, &clutter, &SceneParams::default(), &mut rng(2)).unwrap();
        let sorted = |s: &SceneSpec| {
            let mut v: Vec<(f64, f64)> = s
                .scatterers
                .iter()
                .map(|x| (x.amplitude.re, x.amplitude.im))
                .collect();
            v.sort_by(|p, q| p.partial_cmp(q).unwrap());
            v
        };
        assert_eq!(sorted(&a), sorted(&b));
        assert_ne!(a.scatterers[0].position, b.scatterers[0].position);
    }

    #[test]
    fn pose_ranges() {
        let clutter = table_clutter(0, &SceneParams::default());
        for i in 0..200 {
            let s = sample_object_scene(2, &clutter, &SceneParams::default(), &mut rng(i)).unwrap();
            assert!((0.0..2.0 * PI).contains(&s.pose.yaw));
            assert!(s.pose.tilt.abs() <= SceneParams::default().max_tilt);
            let p = SceneParams::default();
            assert!(s.pose.offset[0].abs() <= p.max_lateral_offset);
            assert!(s.pose.offset[1].abs() <= p.max_lateral_offset);
            assert!(s.pose.offset[2].abs() <= p.max_range_offset);
            for sc in &s.scatterers {
                assert!(sc.position[2] > 0.25 && sc.position[2] < 0.65);
            }
        }
    }

    #[test]
    fn unknown_class_rejected() {
        assert!(sample_object_scene(5, &[], &SceneParams::default(), &mut rng(0)).is_err());
    }

    #[test]
    fn clutter_is_seed_deterministic() {
        assert_eq!(
            table_clutter(9, &SceneParams::default()),
            table_clutter(9, &SceneParams::default())
        );
        assert_ne!(
            table_clutter(9, &SceneParams::default()),
            table_clutter(10, &SceneParams::default())
        );
    }

    #[test]
    fn identity_occluder_leaves_scene_unchanged() {
        let clutter = table_clutter(0, &SceneParams::default());
        let scene = sample_object_scene(3, &clutter, &SceneParams::default(), &mut rng(0)).unwrap();
        let occ = apply_occlusion(&scene, &OccluderSpec::transparent(), &mut rng(1)).unwrap();
        assert_eq!(occ.scatterers, scene.scatterers);
        assert_eq!(occ.clutter, scene.clutter);
    }

    #[test]
    fn attenuation_halves_magnitudes() {
        let clutter = table_clutter(0, &SceneParams::default());
        let scene = sample_object_scene(0, &clutter, &SceneParams::default(), &mut rng(0)).unwrap();
        let occ = apply_occlusion(&scene, &OccluderSpec::cardboard_box(), &mut rng(1)).unwrap();
        for (a, b) in scene.scatterers.iter().zip(&occ.scatterers) {
            assert!((b.amplitude.norm() - 0.5 * a.amplitude.norm()).abs() < 1e-15);
        }
        assert_eq!(occ.clutter, scene.clutter);
        assert_eq!(occ.all_scatterers().count(), 25 + 30 + 25);
    }

    #[test]
    fn double_occlusion_rejected() {
        let scene = place_object(ObjectClass::Gum, Pose::default(), &[]);
        let occ = apply_occlusion(&scene, &OccluderSpec::cardboard_box(), &mut rng(0)).unwrap();
        assert!(apply_occlusion(&occ, &OccluderSpec::cardboard_box(), &mut rng(0)).is_err());
    }

    #[test]
    fn invalid_attenuation_rejected() {
        let scene = place_object(ObjectClass::Gum, Pose::default(), &[]);
        let mut occ = OccluderSpec::cardboard_box();
        occ.attenuation = 0.0;
        assert!(apply_occlusion(&scene, &occ, &mut rng(0)).is_err());
        occ.attenuation = 1.5;
        assert!(apply_occlusion(&scene, &occ, &mut rng(0)).is_err());
    }
}
