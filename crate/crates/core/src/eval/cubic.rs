//! Not-a-knot cubic spline resampling along one volume axis.
//!
//! Not-a-knot end conditions reproduce cubic polynomials exactly over the whole line, which needs
//! at least four samples. Target samples sit at cell centers of the output grid (the same
//! convention as the model's coordinate grid) and positions beyond the outer input samples clamp
//! to them.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::volume::Volume;

/// Second derivatives of the not-a-knot spline through `y` at unit spacing.
pub fn spline_second_derivatives(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 4, "not-a-knot spline needs at least 4 samples");
    let delta = |i: usize| y[i - 1] - 2.0 * y[i] + y[i + 1];
    let mut m = vec![0.0; n];
    // With unit spacing the not-a-knot rows fix the second and second-to-last values directly.
    m[1] = delta(1);
    m[n - 2] = delta(n - 2);
    let inner = n.saturating_sub(4);
    if inner > 0 {
        // rows 2..=n-3: m[i-1] + 4 m[i] + m[i+1] = 6 delta(i)
        let mut c = vec![0.0; inner];
        let mut d = vec![0.0; inner];
        for (t, i) in (2..n - 2).enumerate() {
            let mut rhs = 6.0 * delta(i);
            if i == 2 {
                rhs -= m[1];
            }
            if i == n - 3 {
                rhs -= m[n - 2];
            }
            let denom = if t == 0 { 4.0 } else { 4.0 - c[t - 1] };
            c[t] = 1.0 / denom;
            d[t] = if t == 0 { rhs / denom } else { (rhs - d[t - 1]) / denom };
        }
        for t in (0..inner).rev() {
            let next = if t + 1 < inner { m[t + 3] } else { 0.0 };
            m[t + 2] = d[t] - c[t] * next;
        }
    }
    m[0] = 2.0 * m[1] - m[2];
    m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
    m
}

/// Evaluate the spline with knots `y` and second derivatives `m` at position `t`.
pub fn spline_eval(y: &[f64], m: &[f64], t: f64) -> f64 {
    let n = y.len();
    let t = t.clamp(0.0, (n - 1) as f64);
    let i = (libm::floor(t) as usize).min(n - 2);
    let a = (i + 1) as f64 - t;
    let b = t - i as f64;
    m[i] * a * a * a / 6.0 + m[i + 1] * b * b * b / 6.0 + (y[i] - m[i] / 6.0) * a + (y[i + 1] - m[i + 1] / 6.0) * b
}

/// Resample `volume` along `axis` to `target_dim` samples.
pub fn cubic_upsample(volume: &Volume, axis: usize, target_dim: usize) -> Result<Volume> {
    if axis > 2 {
        return Err(Error::Axis(axis));
    }
    let n = volume.dims()[axis];
    if n < 4 {
        return Err(Error::Shape(alloc::format!("cubic resampling needs >= 4 samples along axis {axis}, got {n}")));
    }
    if target_dim == 0 {
        return Err(Error::Shape("target dimension must be >= 1".into()));
    }
    let ratio = n as f64 / target_dim as f64;
    let positions: Vec<f64> = (0..target_dim).map(|j| (j as f64 + 0.5) * ratio - 0.5).collect();
    let mut y = vec![0.0; n];
    let out = volume.map_lines(axis, target_dim, |line, res| {
        for (a, &b) in y.iter_mut().zip(line) {
            *a = b as f64;
        }
        let m = spline_second_derivatives(&y);
        for (o, &t) in res.iter_mut().zip(&positions) {
            *o = spline_eval(&y, &m, t) as f32;
        }
    })?;
    let mut spacing = volume.spacing();
    spacing[axis] *= ratio;
    out.with_spacing(spacing)
}
