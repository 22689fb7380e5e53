use coherent_fingerprint::optics::{sample_click_range, Sampler};
use coherent_fingerprint::vectors::sum_norm_sq;
use coherent_fingerprint::{
    beamsplitter_amplitudes, euclidean_distance_sq, inner_product_from_distance, multiplex, ofdm_encode,
    random_unit_vector, sample_clicks_with, ClickModel, ClickProbabilities, ProtocolParams,
};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beam_splitter_conserves_energy(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let (o0, o1) = beamsplitter_amplitudes(a, b);
        prop_assert!((o0 * o0 + o1 * o1 - (a * a + b * b)).abs() <= 1e-12 * (1.0 + a * a + b * b));
    }

    #[test]
    fn distance_and_inner_product_agree(n in 1usize..200, sx in any::<u64>(), sy in any::<u64>()) {
        let x = random_unit_vector(n, sx).unwrap();
        let y = random_unit_vector(n, sy).unwrap();
        let d = euclidean_distance_sq(&x, &y).unwrap();
        let s = sum_norm_sq(&x, &y).unwrap();
        prop_assert!((0.0..=4.0 + 1e-12).contains(&d));
        prop_assert!((d + s - 4.0).abs() < 1e-9);
        prop_assert!((inner_product_from_distance(d.min(4.0)).unwrap() - x.dot(&y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ofdm_round_trip_and_parseval(amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..65)) {
        let amps: Vec<Complex64> = amps.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        let k = amps.len() as f64;
        let symbol = ofdm_encode(&amps).unwrap();
        let back = multiplex::ofdm_decode_all(&symbol.time_samples).unwrap();
        for (a, b) in amps.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
        let sent: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let carried: f64 = symbol.time_samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / k;
        prop_assert!((sent - carried).abs() <= 1e-10);
    }

    /// Splitting the repetitions anywhere and merging gives the same tally.
    #[test]
    fn tallies_stream(split in 0u64..3000, seed in any::<u64>(), slotwise in any::<bool>()) {
        let sampler = if slotwise { Sampler::Slotwise } else { Sampler::Thinned };
        let x = random_unit_vector(32, 1).unwrap();
        let y = random_unit_vector(32, 2).unwrap();
        let params = ProtocolParams::new(3.0, 0.97, 1e-3, 0.2, 0.05, 32, 1).unwrap();
        let probs = multiplex::multiplexed_click_probabilities(&x, &y, &params, ClickModel::Exact, Default::default()).unwrap();
        let whole = sample_clicks_with(&probs, 3000, seed, sampler).unwrap();
        let merged = sample_click_range(&probs, 0..split, seed, sampler)
            .merge(sample_click_range(&probs, split..3000, seed, sampler));
        prop_assert_eq!(whole, merged);
    }
}

#[test]
fn more_light_never_means_fewer_clicks() {
    // Slotwise draws are shared, so raising every probability can only add clicks.
    let low = ClickProbabilities::uniform(50, 0.01, 0.02).unwrap();
    let high = ClickProbabilities::uniform(50, 0.03, 0.02).unwrap();
    let a = sample_clicks_with(&low, 500, 4, Sampler::Slotwise).unwrap();
    let b = sample_clicks_with(&high, 500, 4, Sampler::Slotwise).unwrap();
    assert!(b.s0 >= a.s0);
    assert_eq!(a.s1, b.s1);
}
