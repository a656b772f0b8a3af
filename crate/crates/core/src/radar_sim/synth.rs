use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{
    distance, virtual_array_positions, ArrayGeometry, ComplexFrame, Point3, RadarConfig, Scatterer,
    SceneSpec, Variant,
};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Stepped-frequency response of one virtual channel:
/// `s[n] = Σ_k a_k · exp(−j·2π·f_n·r_k / c)` with `r_k = |tx − p_k| + |p_k − rx|`.
pub fn synthesize_channel(
    scatterers: &[Scatterer],
    tx: Point3,
    rx: Point3,
    config: &RadarConfig,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); config.samples];
    accumulate_channel(scatterers.iter(), &tx, &rx, config, &mut out);
    out
}

fn accumulate_channel<'a>(
    scatterers: impl Iterator<Item = &'a Scatterer>,
    tx: &Point3,
    rx: &Point3,
    config: &RadarConfig,
    out: &mut [Complex64],
) {
    let f0 = config.freq_hz(0);
    let df = config.freq_step_hz();
    for s in scatterers {
        let path = distance(tx, &s.position) + distance(&s.position, rx);
        let k = -2.0 * PI * path / SPEED_OF_LIGHT;
        // phase ramp by complex rotation; exact restart every 25 steps keeps
        // the accumulated rounding far below 1e-12 rad
        let step = Complex64::from_polar(1.0, k * df);
        let mut phasor = Complex64::new(0.0, 0.0);
        for (n, o) in out.iter_mut().enumerate() {
            if n % 25 == 0 {
                phasor = Complex64::from_polar(1.0, k * (f0 + n as f64 * df));
            } else {
                phasor *= step;
            }
            *o += s.amplitude * phasor;
        }
    }
}

/// Deterministic cube (tx-major, rx, sample) of a scatterer set.
fn render<'a>(
    scatterers: impl Iterator<Item = &'a Scatterer> + Clone,
    geometry: &ArrayGeometry,
    config: &RadarConfig,
) -> Vec<Complex64> {
    let n = config.samples;
    let mut cube = vec![Complex64::new(0.0, 0.0); config.channels() * n];
    for (t, tx) in geometry.tx_positions.iter().enumerate() {
        for (r, rx) in geometry.rx_positions.iter().enumerate() {
            let start = (t * config.rx_count + r) * n;
            accumulate_channel(
                scatterers.clone(),
                tx,
                rx,
                config,
                &mut cube[start..start + n],
            );
        }
    }
    cube
}

fn check_range(scene: &SceneSpec, geometry: &ArrayGeometry, config: &RadarConfig) -> Result<()> {
    let limit = config.unambiguous_range_m();
    for s in scene.all_scatterers() {
        if !s.position.iter().all(|c| c.is_finite())
            || !(s.amplitude.re.is_finite() && s.amplitude.im.is_finite())
        {
            return Err(Error::Config(
                "scatterer with non-finite position or amplitude".into(),
            ));
        }
        for tx in &geometry.tx_positions {
            for rx in &geometry.rx_positions {
                let range = 0.5 * (distance(tx, &s.position) + distance(&s.position, rx));
                if range >= limit {
                    return Err(Error::Config(format!(
                        "scatterer at range {range:.3} m exceeds the unambiguous range {limit:.3} m"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Gain `g ≥ 0` with `mean |g·object + background|² = 2·target`.
fn calibration_gain(
    object: &[Complex64],
    background: &[Complex64],
    target_mean_power: f64,
) -> Result<f64> {
    let a: f64 = object.iter().map(|z| z.norm_sqr()).sum();
    if a == 0.0 {
        return Ok(1.0);
    }
    let b: f64 = object
        .iter()
        .zip(background)
        .map(|(o, g)| (o.conj() * g).re)
        .sum();
    let c: f64 = background.iter().map(|z| z.norm_sqr()).sum();
    let total = 2.0 * target_mean_power * object.len() as f64;
    let disc = b * b - a * (c - total);
    let gain = (-b + disc.max(0.0).sqrt()) / a;
    if disc < 0.0 || gain <= 0.0 {
        return Err(Error::Config(
            "background power alone exceeds the calibration target".into(),
        ));
    }
    Ok(gain)
}

fn background(scene: &SceneSpec) -> impl Iterator<Item = &Scatterer> + Clone {
    let face = scene
        .occluder
        .as_ref()
        .map(|o| o.face_scatterers.as_slice())
        .unwrap_or(&[]);
    scene.clutter.iter().chain(face)
}

/// Scales the object scatterers so that the deterministic frame has the
/// configured per-component mean power. Idempotent.
pub fn calibrate_scene(scene: &SceneSpec, config: &RadarConfig) -> Result<SceneSpec> {
    config.validate()?;
    if scene.calibrated {
        return Ok(scene.clone());
    }
    let geometry = virtual_array_positions(config);
    check_range(scene, &geometry, config)?;
    let object = render(scene.scatterers.iter(), &geometry, config);
    let bg = render(background(scene), &geometry, config);
    let gain = calibration_gain(&object, &bg, config.target_mean_power)?;
    let mut out = scene.clone();
    for s in &mut out.scatterers {
        s.amplitude = s.amplitude.scale(gain);
    }
    out.calibrated = true;
    Ok(out)
}

/// Full data cube of a scene: calibrated object response, clutter, occluder
/// face and circular Gaussian receiver noise.
///
/// Uncalibrated scenes are calibrated on the fly. To keep an occluded frame
/// on the same power scale as its clean counterpart, calibrate before
/// occluding.
pub fn synthesize_frame<R: Rng + ?Sized>(
    scene: &SceneSpec,
    config: &RadarConfig,
    frame_id: u64,
    rng_stream: &mut R,
) -> Result<ComplexFrame> {
    config.validate()?;
    if scene.class_id >= crate::NUM_CLASSES {
        return Err(Error::InvalidArgument(format!(
            "unknown class id {}",
            scene.class_id
        )));
    }
    let geometry = virtual_array_positions(config);
    check_range(scene, &geometry, config)?;

    let object = render(scene.scatterers.iter(), &geometry, config);
    let bg = render(background(scene), &geometry, config);
    let gain = if scene.calibrated {
        1.0
    } else {
        calibration_gain(&object, &bg, config.target_mean_power)?
    };

    let mut data: Vec<Complex32> = object
        .iter()
        .zip(&bg)
        .map(|(o, g)| {
            let z = o.scale(gain) + g;
            Complex32::new(z.re as f32, z.im as f32)
        })
        .collect();

    if config.noise_floor_var > 0.0 {
        let normal = Normal::new(0.0, (config.noise_floor_var / 2.0).sqrt())
            .map_err(|e| Error::Config(e.to_string()))?;
        for z in &mut data {
            let re: f64 = normal.sample(rng_stream);
            let im: f64 = normal.sample(rng_stream);
            z.re = (z.re as f64 + re) as f32;
            z.im = (z.im as f64 + im) as f32;
        }
    }

    let variant = if scene.occluder.is_some() {
        Variant::Occluded
    } else {
        Variant::Clean
    };
    ComplexFrame::new(
        config.tx_count,
        config.rx_count,
        config.samples,
        data,
        scene.class_id as u8,
        variant,
        frame_id,
    )
}
