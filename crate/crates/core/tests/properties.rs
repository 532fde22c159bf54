use dpjl::estimators::{bias_term, estimate_sqdist};
use dpjl::hadamard::{fwht, fwht_in_place};
use dpjl::privacy::{
    calibrate_gaussian, calibrate_laplace, laplace_threshold, privatize, select_mechanism, Mechanism,
    NoiseSpec, PrivacyParams, PrivateSketch, SensitivityPair,
};
use dpjl::rng::Rng;
use dpjl::transforms::{FjltTransform, HashMode, IidGaussianTransform, SjltTransform, Transform};
use proptest::prelude::*;

fn vec_of(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed, 99);
    (0..len).map(|_| rng.uniform() * 20.0 - 10.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fwht_preserves_norm_and_inverts(log_d in 0u32..=16, seed in any::<u64>()) {
        let v = vec_of(1 << log_d, seed);
        let h = fwht(&v).unwrap();
        let n0: f64 = v.iter().map(|x| x * x).sum();
        let n1: f64 = h.iter().map(|x| x * x).sum();
        prop_assert!((n1 - n0).abs() <= 1e-12 * n0);
        let mut back = h;
        fwht_in_place(&mut back).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sjlt_columns_have_block_structure(d in 1usize..40, s in 1usize..8, per_block in 1usize..6, seed in any::<u64>()) {
        let k = s * per_block;
        let t = SjltTransform::with_dims(d, k, s, seed, HashMode::Prf).unwrap();
        let m = t.materialize();
        for j in 0..d {
            let mut l1 = 0.0;
            let mut l2 = 0.0;
            for r in 0..s {
                let hits: Vec<f64> = (r * per_block..(r + 1) * per_block).map(|i| m[i][j]).filter(|v| *v != 0.0).collect();
                prop_assert_eq!(hits.len(), 1);
                prop_assert!((hits[0].abs() - 1.0 / (s as f64).sqrt()).abs() < 1e-15);
                l1 += hits[0].abs();
                l2 += hits[0] * hits[0];
            }
            prop_assert!((l1 - (s as f64).sqrt()).abs() < 1e-12);
            prop_assert!((l2.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linearity(seed in any::<u64>(), d in 1usize..30) {
        let transforms: Vec<Transform> = vec![
            SjltTransform::with_dims(d, 6, 3, seed, HashMode::Prf).unwrap().into(),
            FjltTransform::new(0.25, 0.1, d, 5, 1.0, seed).unwrap().into(),
            IidGaussianTransform::new(d, 5, seed).unwrap().into(),
        ];
        let x = vec_of(d, seed);
        let y = vec_of(d, seed ^ 1);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        for t in transforms {
            let (tx, ty, ts) = (t.apply(&x).unwrap(), t.apply(&y).unwrap(), t.apply(&sum).unwrap());
            for i in 0..tx.len() {
                prop_assert!((tx[i] + ty[i] - ts[i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn sjlt_updates_compose_to_apply(seed in any::<u64>(), n in 1usize..300) {
        let t = SjltTransform::with_dims(25, 12, 4, seed, HashMode::Prf).unwrap();
        let mut rng = Rng::new(seed, 5);
        let mut acc = vec![0.0; 12];
        let mut x = vec![0.0; 25];
        for _ in 0..n {
            let j = rng.below(25) as usize;
            let delta = rng.uniform() * 2.0 - 1.0;
            let before = acc.clone();
            t.update(&mut acc, j, delta).unwrap();
            let touched = acc.iter().zip(&before).filter(|(a, b)| a != b).count();
            prop_assert!(touched <= 4);
            x[j] += delta;
        }
        let batch = t.apply(&x).unwrap();
        for (a, b) in acc.iter().zip(&batch) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn selection_is_argmin_with_laplace_ties(d2 in 0.01f64..5.0, ratio in 1.0f64..6.0, log_delta in -30.0f64..-0.01) {
        let sens = SensitivityPair::new(d2 * ratio, d2);
        let delta = log_delta.exp();
        let pp = PrivacyParams::new(1.0, delta).unwrap();
        let mech = select_mechanism(&sens, &pp);
        let gauss_eff = d2 * (1.0 / delta).ln().sqrt();
        let argmin = if sens.delta1 <= gauss_eff { Mechanism::Laplace } else { Mechanism::Gaussian };
        prop_assert_eq!(mech, argmin);
        let threshold = laplace_threshold(&sens);
        if ((delta - threshold) / threshold).abs() > 1e-9 {
            let by_threshold = if delta < threshold { Mechanism::Laplace } else { Mechanism::Gaussian };
            prop_assert_eq!(mech, by_threshold);
        }
        prop_assert_eq!(sens.m(delta), sens.delta1.min(gauss_eff));
    }

    #[test]
    fn calibration_is_monotone(a in 0.01f64..10.0, b in 0.01f64..10.0, eps in 0.01f64..5.0, eps2 in 0.01f64..5.0, log_delta in -20.0f64..-0.5) {
        let delta = log_delta.exp();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(calibrate_laplace(lo, eps).unwrap().scale() <= calibrate_laplace(hi, eps).unwrap().scale());
        prop_assert!(calibrate_gaussian(lo, eps, delta).unwrap().noise.scale() <= calibrate_gaussian(hi, eps, delta).unwrap().noise.scale());
        if eps != eps2 {
            let (e_lo, e_hi) = if eps < eps2 { (eps, eps2) } else { (eps2, eps) };
            prop_assert!(calibrate_laplace(a, e_hi).unwrap().scale() < calibrate_laplace(a, e_lo).unwrap().scale());
            prop_assert!(calibrate_gaussian(a, e_hi, delta).unwrap().noise.scale() < calibrate_gaussian(a, e_lo, delta).unwrap().noise.scale());
        }
    }

    #[test]
    fn sketch_files_round_trip_bit_exactly(seed in any::<u64>(), scale in 1e-6f64..1e6) {
        let t: Transform = SjltTransform::with_dims(9, 6, 2, seed, HashMode::Prf).unwrap().into();
        let x = vec_of(9, seed);
        let pp = PrivacyParams::new(0.7, 1e-4).unwrap();
        let noise = NoiseSpec::Gaussian { sigma: scale };
        let sk = privatize(&t, &x, &noise, &pp, &mut Rng::new(seed, 1)).unwrap();
        let back = PrivateSketch::from_text(&sk.to_text()).unwrap();
        for (a, b) in sk.values.iter().zip(&back.values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back.noise.scale().to_bits(), scale.to_bits());
        prop_assert_eq!(back, sk);
    }

    #[test]
    fn estimate_is_raw_distance_minus_bias(seed in any::<u64>(), b in 0.0f64..10.0) {
        let t: Transform = SjltTransform::with_dims(7, 6, 3, seed, HashMode::Prf).unwrap().into();
        let pp = PrivacyParams::pure(1.0).unwrap();
        let noise = NoiseSpec::Laplace { b };
        let mut rng = Rng::new(seed, 2);
        let u = privatize(&t, &vec_of(7, seed), &noise, &pp, &mut rng).unwrap();
        let v = privatize(&t, &vec_of(7, !seed), &noise, &pp, &mut rng).unwrap();
        let r = estimate_sqdist(&u, &v).unwrap();
        let raw: f64 = u.values.iter().zip(&v.values).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assert_eq!(r.bias_term, bias_term(r.scheme, &noise, 6, 7).unwrap());
        prop_assert_eq!(r.estimate, raw - r.bias_term);
    }
}
