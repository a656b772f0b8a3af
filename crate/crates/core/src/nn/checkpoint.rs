//! `RCNN` checkpoint files.
//!
//! Little-endian layout:
//!
//! ```text
//! "RCNN"            4 bytes
//! version           u16 (= 1)
//! input_mode        u8  (0 real, 1 imag, 2 complex)
//! input_height      u32
//! input_width       u32
//! layer_count       u8  (= 7)
//! layer table       per layer: id u8, rank u8, rank × u32 dims
//!                   0 bn0 [C] · 1 conv1 [5,5,in,out] · 2 bn1 [C] · 3 conv2
//!                   4 bn2 [C] · 5 conv3 · 6 fc [in,out]
//! parameters        f32, order bn0 (γ, β), conv1 (w, b), bn1, conv2, bn2,
//!                   conv3, fc (w, b)
//! running stats     f32, bn0 (mean, var), bn1, bn2
//! adam flag         u8 (0 absent, 1 present)
//! adam state        t u64, lr f64, β1 f64, β2 f64, ε f64, then every m
//!                   tensor and every v tensor in parameter order (f32)
//! ```

use std::fs;
use std::path::Path;

use super::adam::AdamState;
use super::conv::KERNEL;
use super::model::{InputMode, RadarCnnModel};
use crate::binio::{put_f32s, Reader};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RCNN";
pub const VERSION: u16 = 1;

fn layer_table(model: &RadarCnnModel<f32>) -> Vec<(u8, Vec<u32>)> {
    let k = KERNEL as u32;
    let conv = |c: &super::Conv2d<f32>| vec![k, k, c.in_ch as u32, c.out_ch as u32];
    vec![
        (0, vec![model.bn0.channels() as u32]),
        (1, conv(&model.conv1)),
        (2, vec![model.bn1.channels() as u32]),
        (3, conv(&model.conv2)),
        (4, vec![model.bn2.channels() as u32]),
        (5, conv(&model.conv3)),
        (6, vec![model.fc.in_dim as u32, model.fc.out_dim as u32]),
    ]
}

pub fn to_bytes(model: &RadarCnnModel<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(model.param_count() * 4 + 256);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(model.input_mode.code());
    out.extend_from_slice(&(model.input_height as u32).to_le_bytes());
    out.extend_from_slice(&(model.input_width as u32).to_le_bytes());
    let table = layer_table(model);
    out.push(table.len() as u8);
    for (id, dims) in &table {
        out.push(*id);
        out.push(dims.len() as u8);
        for d in dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
    }
    for p in model.params() {
        put_f32s(&mut out, p);
    }
    for bn in [&model.bn0, &model.bn1, &model.bn2] {
        put_f32s(&mut out, &bn.running_mean);
        put_f32s(&mut out, &bn.running_var);
    }
    match &model.adam {
        None => out.push(0),
        Some(adam) => {
            out.push(1);
            out.extend_from_slice(&adam.t.to_le_bytes());
            for h in [adam.lr, adam.beta1, adam.beta2, adam.eps] {
                out.extend_from_slice(&h.to_le_bytes());
            }
            for m in &adam.m {
                put_f32s(&mut out, m);
            }
            for v in &adam.v {
                put_f32s(&mut out, v);
            }
        }
    }
    out
}

pub fn from_bytes(buf: &[u8]) -> Result<RadarCnnModel<f32>> {
    let mut r = Reader::new(buf);
    if r.bytes(4)? != MAGIC {
        return Err(Error::BadMagic("checkpoint".into(), "RCNN"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::BadVersion {
            found: version,
            expected: VERSION,
        });
    }
    let mode_code = r.u8()?;
    let mode = InputMode::from_code(mode_code)
        .ok_or_else(|| Error::BadHeader(format!("unknown input mode code {mode_code}")))?;
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let mut model = RadarCnnModel::<f32>::new(mode, height, width, 0)
        .map_err(|e| Error::BadHeader(e.to_string()))?;

    let count = r.u8()? as usize;
    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let id = r.u8()?;
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        table.push((id, dims));
    }
    if table != layer_table(&model) {
        return Err(Error::BadHeader(format!(
            "layer table {table:?} does not match a {mode} model for {height}×{width} input"
        )));
    }

    for p in model.params_mut() {
        let vals = r.f32_vec(p.len())?;
        p.copy_from_slice(&vals);
    }
    for bn in [&mut model.bn0, &mut model.bn1, &mut model.bn2] {
        bn.running_mean = r.f32_vec(bn.channels())?;
        bn.running_var = r.f32_vec(bn.channels())?;
    }
    model.adam = match r.u8()? {
        0 => None,
        1 => {
            let sizes = model.param_sizes();
            let t = r.u64()?;
            let lr = r.f64()?;
            let mut adam = AdamState::new(&sizes, lr);
            adam.t = t;
            adam.beta1 = r.f64()?;
            adam.beta2 = r.f64()?;
            adam.eps = r.f64()?;
            for (m, &n) in adam.m.iter_mut().zip(&sizes) {
                *m = r.f32_vec(n)?;
            }
            for (v, &n) in adam.v.iter_mut().zip(&sizes) {
                *v = r.f32_vec(n)?;
            }
            Some(adam)
        }
        other => return Err(Error::BadHeader(format!("adam presence byte {other}"))),
    };
    r.finish()?;
    Ok(model)
}

pub fn save(model: &RadarCnnModel<f32>, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<RadarCnnModel<f32>> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}
