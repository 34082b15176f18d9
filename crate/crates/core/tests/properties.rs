mod common;

use isosr_core::degrade::simulate_lr;
use isosr_core::eval::{psnr, simulate_anisotropic, ssim};
use isosr_core::nn::{l1_loss, query_features, FeatureMap};
use isosr_core::{detect_axis_role, Image, Volume};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = [usize; 3]> {
    [1usize..7, 1usize..7, 1usize..7]
}

/// Independent bilinear reference: locate the four surrounding cell centers directly.
fn bilinear_oracle(fm: &FeatureMap<f64>, p: [f64; 2]) -> Vec<f64> {
    let axis = |x: f64, n: usize| {
        let u = ((x + 1.0) * n as f64 / 2.0 - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = u.floor() as usize;
        let hi = if lo + 1 < n { lo + 1 } else { lo };
        (lo, hi, u - lo as f64)
    };
    let (r0, r1, fr) = axis(p[0], fm.rows());
    let (c0, c1, fc) = axis(p[1], fm.cols());
    let (a, b, c, d) = (fm.at(r0, c0), fm.at(r0, c1), fm.at(r1, c0), fm.at(r1, c1));
    (0..fm.dim())
        .map(|k| (1.0 - fr) * ((1.0 - fc) * a[k] + fc * b[k]) + fr * ((1.0 - fc) * c[k] + fc * d[k]))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slices_round_trip(d in dims(), axis in 0usize..3, seed in any::<u64>()) {
        let v = common::random_volume(d, [1.0, 2.0, 3.0], seed);
        let back = Volume::stack_slices(&v.extract_slices(axis).unwrap(), axis, v.spacing()).unwrap();
        prop_assert_eq!(back.dims(), v.dims());
        prop_assert!(back.data().iter().zip(v.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn degradation_commutes_with_affine_maps(
        h in 4usize..40, w in 1usize..5, k in 1.1f64..4.0, a in 0.1f32..2.0, b in -1.0f32..1.0, seed in any::<u64>()
    ) {
        prop_assume!(isosr_core::degrade::degraded_len(h, k) >= 2);
        let x = common::band_limited(h, w, seed);
        let y = x.map(|v| a * v + b);
        let lx = simulate_lr(&x, k).unwrap();
        let ly = simulate_lr(&y, k).unwrap();
        for (p, q) in ly.data().iter().zip(lx.data()) {
            let want = a as f64 * *q as f64 + b as f64;
            prop_assert!((*p as f64 - want).abs() <= 1e-6, "{} vs {}", p, want);
        }
    }

    #[test]
    fn l1_is_order_invariant_and_zero_when_exact(
        vals in prop::collection::vec((-1.0f32..1.0, -1.0f32..1.0), 1..200), rot in 0usize..200
    ) {
        let (p, t): (Vec<f32>, Vec<f32>) = vals.iter().cloned().unzip();
        let (loss, _) = l1_loss(&p, &t);
        let mut perm = vals.clone();
        perm.rotate_left(rot % vals.len());
        perm.reverse();
        let (pp, pt): (Vec<f32>, Vec<f32>) = perm.into_iter().unzip();
        prop_assert!((l1_loss(&pp, &pt).0 - loss).abs() <= 1e-12);
        prop_assert_eq!(l1_loss(&t, &t).0, 0.0);
    }

    #[test]
    fn feature_query_matches_four_corner_oracle(
        rows in 1usize..6, cols in 1usize..6, d in 1usize..4, seed in any::<u64>(),
        pts in prop::collection::vec((-1.0f64..=1.0, -1.0f64..=1.0), 1..20)
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..d * rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fm = FeatureMap::from_channels(d, rows, cols, values).unwrap();
        let coords: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let got = query_features(&fm, &coords).unwrap();
        for (q, p) in coords.iter().enumerate() {
            let want = bilinear_oracle(&fm, *p);
            for k in 0..d {
                prop_assert!((got[q * d + k] - want[k]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn normalize_is_idempotent(d in dims(), seed in any::<u64>(), scale in 0.5f32..4000.0) {
        let mut v = common::random_volume(d, [1.0; 3], seed);
        prop_assume!(v.len() >= 2);
        v.data_mut().iter_mut().for_each(|x| *x *= scale);
        prop_assume!(v.range().0 < v.range().1);
        let once = v.normalize().unwrap();
        let twice = once.normalize().unwrap();
        prop_assert!(once.data().iter().zip(twice.data()).all(|(a, b)| (a - b).abs() <= 1e-6));
        let back = twice.denormalize();
        for (a, b) in back.data().iter().zip(v.data()) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(scale));
        }
    }

    #[test]
    fn simulation_axis_is_detected(axis in 0usize..3, k in 1.05f64..4.0) {
        let v = common::random_volume([24, 24, 24], [0.7; 3], 3);
        let lr = simulate_anisotropic(&v, k, axis).unwrap();
        let role = detect_axis_role(&lr).unwrap();
        prop_assert_eq!(role.lr_axis, axis);
        prop_assert!((role.scale - k).abs() <= 1e-6);
    }

    #[test]
    fn ssim_is_symmetric(seed in any::<u64>()) {
        let a = common::band_limited(12, 14, seed);
        let b = common::band_limited(12, 14, seed ^ 0x9e37);
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() <= 1e-9);
        prop_assert!(ssim(&a, &b).unwrap() <= 1.0);
    }
}

#[test]
fn psnr_falls_as_noise_grows() {
    use rand::{Rng, SeedableRng};
    let clean = common::band_limited(32, 32, 1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let noise: Vec<f32> = (0..clean.data().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scores: Vec<f64> = [0.01f32, 0.05, 0.2]
        .iter()
        .map(|&amp| {
            let noisy = Image::from_vec(32, 32, clean.data().iter().zip(&noise).map(|(c, n)| c + amp * n).collect()).unwrap();
            psnr(&noisy, &clean).unwrap()
        })
        .collect();
    assert!(scores[0] > scores[1] && scores[1] > scores[2], "{scores:?}");
}
