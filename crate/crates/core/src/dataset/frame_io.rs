//! `RCUB` frame files.
//!
//! Little-endian layout: `"RCUB"`, version u16, tx u16, rx u16, samples u32,
//! class_id u8, variant u8, frame_id u64, then `tx·rx·samples` interleaved
//! (I, Q) binary32 pairs with tx outermost and the sample index innermost.

use std::fs;
use std::path::Path;

use num_complex::Complex32;

use crate::binio::{put_f32s, Reader};
use crate::radar_sim::{ComplexFrame, Variant};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RCUB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

pub fn frame_to_bytes(frame: &ComplexFrame) -> Vec<u8> {
    let (tx, rx, samples) = frame.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + frame.data().len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tx as u16).to_le_bytes());
    out.extend_from_slice(&(rx as u16).to_le_bytes());
    out.extend_from_slice(&(samples as u32).to_le_bytes());
    out.push(frame.class_id);
    out.push(frame.variant.code());
    out.extend_from_slice(&frame.frame_id.to_le_bytes());
    let iq: Vec<f32> = frame.data().iter().flat_map(|z| [z.re, z.im]).collect();
    put_f32s(&mut out, &iq);
    out
}

pub fn frame_from_bytes(buf: &[u8]) -> Result<ComplexFrame> {
    let mut r = Reader::new(buf);
    if r.bytes(4)? != MAGIC {
        return Err(Error::BadMagic("frame".into(), "RCUB"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::BadVersion {
            found: version,
            expected: VERSION,
        });
    }
    let tx = r.u16()? as usize;
    let rx = r.u16()? as usize;
    let samples = r.u32()? as usize;
    let class_id = r.u8()?;
    let variant_code = r.u8()?;
    let variant = Variant::from_code(variant_code)
        .ok_or_else(|| Error::BadHeader(format!("unknown variant code {variant_code}")))?;
    let frame_id = r.u64()?;
    if tx == 0 || rx == 0 || samples == 0 {
        return Err(Error::BadHeader(format!("empty shape {tx}×{rx}×{samples}")));
    }
    let n = tx * rx * samples;
    let iq = r.f32_vec(2 * n)?;
    r.finish()?;
    let data = iq
        .chunks_exact(2)
        .map(|p| Complex32::new(p[0], p[1]))
        .collect();
    ComplexFrame::new(tx, rx, samples, data, class_id, variant, frame_id)
}

pub fn write_frame(frame: &ComplexFrame, path: &Path) -> Result<()> {
    fs::write(path, frame_to_bytes(frame)).map_err(|e| Error::io(path, e))
}

pub fn read_frame(path: &Path) -> Result<ComplexFrame> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    frame_from_bytes(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ComplexFrame {
        let data = (0..2 * 3 * 4)
            .map(|i| Complex32::new(i as f32 * 0.5, -(i as f32)))
            .collect();
        ComplexFrame::new(2, 3, 4, data, 3, Variant::Occluded, 77).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = frame_to_bytes(&sample());
        assert_eq!(bytes.len(), HEADER_LEN + 24 * 8);
        assert_eq!(&bytes[..4], b"RCUB");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 4);
        assert_eq!(bytes[14], 3);
        assert_eq!(bytes[15], 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 77);
        // second entry's I component
        assert_eq!(f32::from_le_bytes(bytes[32..36].try_into().unwrap()), 0.5);
    }

    #[test]
    fn round_trip() {
        let f = sample();
        assert_eq!(frame_from_bytes(&frame_to_bytes(&f)).unwrap(), f);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = frame_to_bytes(&sample());
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(frame_from_bytes(&bad), Err(Error::BadMagic(..))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            frame_from_bytes(&bad),
            Err(Error::BadVersion { .. })
        ));
        let mut bad = bytes.clone();
        bad[15] = 9;
        assert!(matches!(frame_from_bytes(&bad), Err(Error::BadHeader(_))));
        assert!(matches!(
            frame_from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            frame_from_bytes(&bytes[..10]),
            Err(Error::Truncated { .. })
        ));
        let mut long = bytes;
        long.extend_from_slice(&[0; 8]);
        assert!(matches!(frame_from_bytes(&long), Err(Error::BadHeader(_))));
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let mut bytes = frame_to_bytes(&sample());
        bytes[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(frame_from_bytes(&bytes).is_err());
    }
}
