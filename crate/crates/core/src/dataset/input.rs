//! Frame to network-input conversion.
//!
//! Row `tx·rx_count + rx`, column = frequency sample. Complex input carries
//! the real part in channel 0 and the imaginary part in channel 1.

use crate::nn::{InputMode, Tensor};
use crate::radar_sim::ComplexFrame;
use crate::{Error, Result};

/// `(1, tx·rx, samples, N)` input for one frame.
pub fn frame_to_input(frame: &ComplexFrame, mode: InputMode) -> Tensor {
    let (tx, rx, samples) = frame.shape();
    let n = mode.channels();
    let mut data = Vec::with_capacity(frame.data().len() * n);
    // frame storage order already is (tx, rx, sample), i.e. (row, col)
    match mode {
        InputMode::Real => data.extend(frame.data().iter().map(|z| z.re)),
        InputMode::Imag => data.extend(frame.data().iter().map(|z| z.im)),
        InputMode::Complex => data.extend(frame.data().iter().flat_map(|z| [z.re, z.im])),
    }
    Tensor::from_vec([1, tx * rx, samples, n], data).expect("length matches shape")
}

/// Stacks per-frame inputs into one batch. All frames must share a shape.
pub fn batch_inputs(frames: &[&ComplexFrame], mode: InputMode) -> Result<Tensor> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    let shape = first.shape();
    let (tx, rx, samples) = shape;
    let n = mode.channels();
    let item = tx * rx * samples * n;
    let mut data = Vec::with_capacity(item * frames.len());
    for f in frames {
        if f.shape() != shape {
            return Err(Error::Shape(format!(
                "frame {} has shape {:?}, batch expects {:?}",
                f.frame_id,
                f.shape(),
                shape
            )));
        }
        data.extend_from_slice(frame_to_input(f, mode).data());
    }
    Tensor::from_vec([frames.len(), tx * rx, samples, n], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_sim::Variant;
    use num_complex::Complex32;

    fn standard_frame() -> ComplexFrame {
        let mut f = ComplexFrame::zeros(20, 20, 100);
        for (i, z) in f.data_mut().iter_mut().enumerate() {
            *z = Complex32::new(i as f32, -(i as f32) * 0.5);
        }
        f.variant = Variant::Clean;
        f
    }

    #[test]
    fn row_is_tx_major() {
        let f = standard_frame();
        let t = frame_to_input(&f, InputMode::Real);
        assert_eq!(t.shape(), [1, 400, 100, 1]);
        assert_eq!(t.get([0, 67, 50, 0]), f.get(3, 7, 50).re);
    }

    #[test]
    fn complex_channels() {
        let f = standard_frame();
        let t = frame_to_input(&f, InputMode::Complex);
        assert_eq!(t.shape(), [1, 400, 100, 2]);
        assert_eq!(t.get([0, 67, 50, 0]), f.get(3, 7, 50).re);
        assert_eq!(t.get([0, 67, 50, 1]), f.get(3, 7, 50).im);
    }

    #[test]
    fn real_frame_has_zero_imag_channel() {
        let mut f = standard_frame();
        for z in f.data_mut() {
            z.im = 0.0;
        }
        let t = frame_to_input(&f, InputMode::Complex);
        assert!(t.data().chunks(2).all(|p| p[1] == 0.0));
    }

    #[test]
    fn real_and_imag_recombine() {
        let f = standard_frame();
        let re = frame_to_input(&f, InputMode::Real);
        let im = frame_to_input(&f, InputMode::Imag);
        let rebuilt: Vec<Complex32> = re
            .data()
            .iter()
            .zip(im.data())
            .map(|(&a, &b)| Complex32::new(a, b))
            .collect();
        assert_eq!(rebuilt, f.data());
    }

    #[test]
    fn batch_stacks_items() {
        let a = standard_frame();
        let mut b = standard_frame();
        b.data_mut()[0] = Complex32::new(9.0, 9.0);
        let t = batch_inputs(&[&a, &b], InputMode::Imag).unwrap();
        assert_eq!(t.shape(), [2, 400, 100, 1]);
        assert_eq!(t.get([1, 0, 0, 0]), 9.0);
        assert_eq!(t.get([0, 0, 0, 0]), 0.0);
        let small = ComplexFrame::zeros(2, 2, 100);
        assert!(batch_inputs(&[&a, &small], InputMode::Real).is_err());
        assert!(batch_inputs(&[], InputMode::Real).is_err());
    }
}
