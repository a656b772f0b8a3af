use num_complex::{Complex32, Complex64};
use proptest::prelude::*;

use radarcnn::dataset::{
    add_noise, eval_noise_stream, frame_from_bytes, frame_to_bytes, frame_to_input, NoiseSpec,
};
use radarcnn::nn::{
    argmax, checkpoint, maxpool_forward, softmax_cross_entropy, InputMode, RadarCnnModel, Tensor,
};
use radarcnn::pipeline::ConfusionMatrix;
use radarcnn::radar_sim::{synthesize_channel, ComplexFrame, RadarConfig, Scatterer, Variant};
use radarcnn::NUM_CLASSES;

fn finite_f32() -> impl Strategy<Value = f32> {
    -1.0e3f32..1.0e3f32
}

fn arb_frame() -> impl Strategy<Value = ComplexFrame> {
    (1usize..4, 1usize..4, 1usize..12)
        .prop_flat_map(|(tx, rx, n)| {
            (
                Just((tx, rx, n)),
                prop::collection::vec((finite_f32(), finite_f32()), tx * rx * n),
                0u8..5,
                prop_oneof![
                    Just(Variant::Clean),
                    Just(Variant::Occluded),
                    Just(Variant::Noisy)
                ],
                any::<u64>(),
            )
        })
        .prop_map(|((tx, rx, n), data, class_id, variant, id)| {
            let data = data
                .into_iter()
                .map(|(re, im)| Complex32::new(re, im))
                .collect();
            ComplexFrame::new(tx, rx, n, data, class_id, variant, id).unwrap()
        })
}

fn arb_scatterer() -> impl Strategy<Value = Scatterer> {
    (
        -0.2f64..0.2,
        -0.2f64..0.2,
        0.3f64..0.7,
        -1.0f64..1.0,
        -1.0f64..1.0,
    )
        .prop_map(|(x, y, z, re, im)| Scatterer::new([x, y, z], Complex64::new(re, im)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_bytes_round_trip(frame in arb_frame()) {
        let bytes = frame_to_bytes(&frame);
        let back = frame_from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &frame);
        prop_assert_eq!(frame_to_bytes(&back), bytes);
    }

    #[test]
    fn truncated_frame_bytes_are_rejected(frame in arb_frame(), cut in 1usize..16) {
        let bytes = frame_to_bytes(&frame);
        let cut = cut.min(bytes.len());
        prop_assert!(frame_from_bytes(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn real_and_imag_inputs_recombine(frame in arb_frame()) {
        let (tx, rx, n) = frame.shape();
        let re = frame_to_input(&frame, InputMode::Real);
        let im = frame_to_input(&frame, InputMode::Imag);
        let both = frame_to_input(&frame, InputMode::Complex);
        for t in 0..tx {
            for r in 0..rx {
                for s in 0..n {
                    let z = frame.get(t, r, s);
                    let row = t * rx + r;
                    prop_assert_eq!(re.get([0, row, s, 0]), z.re);
                    prop_assert_eq!(im.get([0, row, s, 0]), z.im);
                    prop_assert_eq!(both.get([0, row, s, 0]), z.re);
                    prop_assert_eq!(both.get([0, row, s, 1]), z.im);
                }
            }
        }
    }

    #[test]
    fn zero_noise_is_identity(frame in arb_frame(), seed in any::<u64>()) {
        let out = add_noise(&frame, NoiseSpec::new(0.0).unwrap(), &mut eval_noise_stream(seed, frame.frame_id));
        prop_assert_eq!(out, frame);
    }

    #[test]
    fn noise_is_keyed_on_seed_and_frame(frame in arb_frame(), seed in any::<u64>(), sigma2 in 1e-8f64..1e-2) {
        let spec = NoiseSpec::new(sigma2).unwrap();
        let a = add_noise(&frame, spec, &mut eval_noise_stream(seed, frame.frame_id));
        let b = add_noise(&frame, spec, &mut eval_noise_stream(seed, frame.frame_id));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.variant, Variant::Noisy);
        prop_assert_eq!(a.shape(), frame.shape());
    }

    #[test]
    fn channel_synthesis_is_linear(
        a in prop::collection::vec(arb_scatterer(), 0..6),
        b in prop::collection::vec(arb_scatterer(), 0..6),
        tx in -0.02f64..0.02,
        rx in -0.02f64..0.02,
    ) {
        let config = RadarConfig::standard();
        let (t, r) = ([tx, 0.0, 0.0], [0.0, rx, 0.0]);
        let sa = synthesize_channel(&a, t, r, &config);
        let sb = synthesize_channel(&b, t, r, &config);
        let joint: Vec<Scatterer> = a.iter().chain(&b).copied().collect();
        let sab = synthesize_channel(&joint, t, r, &config);
        let scale = sa.iter().chain(&sb).map(|z| z.norm()).fold(1e-12, f64::max);
        for ((x, y), z) in sa.iter().zip(&sb).zip(&sab) {
            prop_assert!((x + y - z).norm() <= 1e-6 * scale);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one(
        logits in prop::collection::vec(-50.0f64..50.0, NUM_CLASSES * 3),
        labels in prop::collection::vec(0usize..NUM_CLASSES, 3),
    ) {
        let ce = softmax_cross_entropy(&logits, &labels, NUM_CLASSES).unwrap();
        for row in ce.probs.chunks(NUM_CLASSES) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn batch_loss_is_mean_of_items(
        logits in prop::collection::vec(-20.0f64..20.0, NUM_CLASSES * 4),
        labels in prop::collection::vec(0usize..NUM_CLASSES, 4),
    ) {
        let batch = softmax_cross_entropy(&logits, &labels, NUM_CLASSES).unwrap();
        let mut sum = 0.0;
        for (i, &l) in labels.iter().enumerate() {
            let row = &logits[i * NUM_CLASSES..(i + 1) * NUM_CLASSES];
            sum += softmax_cross_entropy(row, &[l], NUM_CLASSES).unwrap().loss;
        }
        prop_assert!((batch.loss - sum / 4.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_survives_shift_and_positive_scale(
        row in prop::collection::vec(-10.0f64..10.0, NUM_CLASSES),
        shift in -100.0f64..100.0,
        scale in 0.01f64..100.0,
    ) {
        let moved: Vec<f64> = row.iter().map(|v| v * scale + shift).collect();
        let a = argmax(&row);
        let b = argmax(&moved);
        // rounding may merge near-ties; the winner must still be maximal
        prop_assert!(moved[a] >= moved[b] - 1e-9 * (1.0 + moved[b].abs()));
        prop_assert!(row[b] >= row[a] - 1e-9 * (1.0 + row[a].abs()));
    }

    #[test]
    fn maxpool_dominates_its_input(
        (h, w, c, data) in (1usize..8, 1usize..8, 1usize..3)
            .prop_flat_map(|(h, w, c)| (Just(h), Just(w), Just(c), prop::collection::vec(-5.0f32..5.0, 2 * h * w * c)))
    ) {
        let x = Tensor::from_vec([2, h, w, c], data).unwrap();
        let y = maxpool_forward(&x).unwrap().output;
        prop_assert_eq!(y.shape(), x.shape());
        for (a, b) in x.data().iter().zip(y.data()) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn confusion_counts_are_consistent(
        pairs in prop::collection::vec((0usize..NUM_CLASSES, 0usize..NUM_CLASSES), 1..200)
    ) {
        let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let m = ConfusionMatrix::from_pairs(&truth, &pred).unwrap();
        prop_assert_eq!(m.total(), pairs.len() as u64);
        let hits = pairs.iter().filter(|(t, p)| t == p).count() as u64;
        prop_assert_eq!(m.correct(), hits);
        for (k, sum) in m.row_sums().iter().enumerate() {
            prop_assert_eq!(*sum, truth.iter().filter(|&&t| t == k).count() as u64);
        }
        prop_assert!((m.accuracy() - 100.0 * hits as f64 / pairs.len() as f64).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn checkpoint_round_trip(
        mode in prop_oneof![Just(InputMode::Real), Just(InputMode::Imag), Just(InputMode::Complex)],
        h in 13usize..17,
        w in 13usize..17,
        seed in any::<u64>(),
        trained in any::<bool>(),
    ) {
        let mut model = RadarCnnModel::<f32>::new(mode, h, w, seed).unwrap();
        if trained {
            let x = Tensor::from_fn([2, h, w, mode.channels()], |[b, i, j, c]| {
                ((b * 31 + i * 7 + j * 3 + c) as f32 * 0.37).sin()
            });
            model.train_step(&x, &[0, 3], 1e-3).unwrap();
        }
        let bytes = checkpoint::to_bytes(&model);
        let back = checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(checkpoint::to_bytes(&back), bytes);
    }
}
