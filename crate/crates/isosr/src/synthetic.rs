//! Synthetic phantoms for demos and tests.

use isosr_core::{Result, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub center: [f64; 3],
    pub sigma: f64,
    pub amplitude: f64,
}

/// `count` isotropic Gaussian blobs with centers uniform in the volume, widths uniform in
/// `sigma` and amplitudes uniform in `[-1, 1)`.
pub fn random_blobs(dims: [usize; 3], count: usize, sigma: (f64, f64), seed: u64) -> Vec<Blob> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let center = [
                rng.random_range(0.0..dims[0] as f64),
                rng.random_range(0.0..dims[1] as f64),
                rng.random_range(0.0..dims[2] as f64),
            ];
            Blob { center, sigma: rng.random_range(sigma.0..sigma.1), amplitude: rng.random_range(-1.0..1.0) }
        })
        .collect()
}

/// Sum of blobs sampled on a unit-spaced grid, min-max normalized.
pub fn blob_phantom(dims: [usize; 3], blobs: &[Blob]) -> Result<Volume> {
    Volume::from_fn(dims, [1.0; 3], |i, j, k| {
        blobs
            .iter()
            .map(|b| {
                let d2 = (i as f64 - b.center[0]).powi(2) + (j as f64 - b.center[1]).powi(2) + (k as f64 - b.center[2]).powi(2);
                b.amplitude * (-d2 / (2.0 * b.sigma * b.sigma)).exp()
            })
            .sum::<f64>() as f32
    })?
    .normalize()
}
