//! The 1D through-plane degradation operator.
//!
//! A line of `n` samples is blurred with a Gaussian of `sigma = 0.5 * sqrt(k^2 - 1)` (edge
//! samples replicated) and then linearly resampled to `round(n / k)` samples placed at cell
//! centers of the coarser grid, i.e. output `j` reads input position `(j + 0.5) * n / m - 0.5`.
//!
//! Training-pair synthesis ([`simulate_lr`]) and test-time anisotropic simulation
//! ([`crate::eval::simulate_anisotropic`]) both go through [`LineDegrader::apply`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

/// Round to nearest, ties to even.
pub fn round_half_even(x: f64) -> f64 {
    let r = libm::round(x);
    if libm::fabs(x - libm::trunc(x)) == 0.5 && libm::fmod(r, 2.0) != 0.0 {
        r - libm::copysign(1.0, x)
    } else {
        r
    }
}

/// Number of samples left after degrading `n` samples by `scale`.
pub fn degraded_len(n: usize, scale: f64) -> usize {
    round_half_even(n as f64 / scale) as usize
}

/// Anti-aliasing Gaussian width for a downsampling factor; zero for `scale <= 1`.
pub fn gaussian_sigma(scale: f64) -> f64 {
    if scale <= 1.0 {
        0.0
    } else {
        0.5 * libm::sqrt(scale * scale - 1.0)
    }
}

/// Precomputed degradation for one `(n, scale)` pair.
#[derive(Debug, Clone)]
pub struct LineDegrader {
    n: usize,
    m: usize,
    kernel: Vec<f64>,
    radius: usize,
    taps: Vec<(usize, usize, f64)>,
}

impl LineDegrader {
    pub fn new(n: usize, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 1.0) {
            return Err(Error::Scale(scale));
        }
        let m = degraded_len(n, scale);
        if m < 2 {
            return Err(Error::Shape(alloc::format!(
                "degrading {n} samples by {scale} leaves {m} (< 2)"
            )));
        }
        let sigma = gaussian_sigma(scale);
        let radius = libm::ceil(3.0 * sigma) as usize;
        let mut kernel: Vec<f64> = (0..=2 * radius)
            .map(|t| {
                let d = t as f64 - radius as f64;
                libm::exp(-d * d / (2.0 * sigma * sigma))
            })
            .collect();
        let total: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|w| *w /= total);

        let ratio = n as f64 / m as f64;
        let taps = (0..m)
            .map(|j| {
                let pos = ((j as f64 + 0.5) * ratio - 0.5).clamp(0.0, (n - 1) as f64);
                let i0 = libm::floor(pos) as usize;
                let i1 = (i0 + 1).min(n - 1);
                (i0, i1, pos - i0 as f64)
            })
            .collect();
        Ok(Self { n, m, kernel, radius, taps })
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    pub fn apply(&self, input: &[f32], output: &mut [f32]) {
        debug_assert_eq!(input.len(), self.n);
        debug_assert_eq!(output.len(), self.m);
        let n = self.n as isize;
        let r = self.radius as isize;
        let blurred: Vec<f64> = (0..n)
            .map(|i| {
                self.kernel
                    .iter()
                    .enumerate()
                    .map(|(t, w)| w * input[(i + t as isize - r).clamp(0, n - 1) as usize] as f64)
                    .sum()
            })
            .collect();
        for (o, &(i0, i1, f)) in output.iter_mut().zip(&self.taps) {
            *o = ((1.0 - f) * blurred[i0] + f * blurred[i1]) as f32;
        }
    }
}

/// Degrade an HR slice along axis 0 by `scale`. Output shape is `(round(h / scale), w)`.
pub fn simulate_lr(hr: &Image<f32>, scale: f64) -> Result<Image<f32>> {
    let (h, w) = hr.shape();
    let op = LineDegrader::new(h, scale)?;
    let m = op.output_len();
    let mut out = Image::zeros(m, w);
    let mut col = vec![0.0f32; h];
    let mut res = vec![0.0f32; m];
    for c in 0..w {
        for (r, x) in col.iter_mut().enumerate() {
            *x = hr.get(r, c);
        }
        op.apply(&col, &mut res);
        for (r, &x) in res.iter().enumerate() {
            out.set(r, c, x);
        }
    }
    Ok(out)
}
