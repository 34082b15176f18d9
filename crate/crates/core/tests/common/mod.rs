#![allow(dead_code)]

use isosr_core::{Image, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of a few low-frequency plane waves, rescaled to [0, 1].
pub fn band_limited(rows: usize, cols: usize, seed: u64) -> Image<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f64; 4]> = (0..5)
        .map(|_| {
            [
                rng.random_range(0.0..3.0),
                rng.random_range(0.0..3.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.3..1.0),
            ]
        })
        .collect();
    let raw = Image::from_fn(rows, cols, |r, c| {
        waves
            .iter()
            .map(|[fr, fc, ph, a]| {
                a * (std::f64::consts::TAU * (fr * r as f64 / rows as f64 + fc * c as f64 / cols as f64) + ph).sin()
            })
            .sum::<f64>() as f32
    });
    let (lo, hi) = raw.range();
    raw.map(|v| (v - lo) / (hi - lo))
}

pub fn random_volume(dims: [usize; 3], spacing: [f64; 3], seed: u64) -> Volume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Volume::from_fn(dims, spacing, |_, _, _| rng.random_range(0.0..1.0)).unwrap()
}
