//! Normalized HR coordinate grids and bilinear feature queries.
//!
//! Coordinates are `p = (x, y)` in `[-1, 1]^2` with `x` along rows (image axis 0) and `y` along
//! columns. An `h x w` grid places its samples at cell centers: row `i` sits at
//! `x = -1 + (2i + 1) / h`. A feature map of any size is addressed with the same convention, so a
//! coordinate refers to the same physical location regardless of resolution.

use alloc::vec::Vec;

use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateGrid {
    rows: usize,
    cols: usize,
    coords: Vec<[f64; 2]>,
}

impl CoordinateGrid {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major list of `(x, y)` coordinates.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn get(&self, r: usize, c: usize) -> [f64; 2] {
        self.coords[r * self.cols + c]
    }
}

/// Cell center of sample `i` out of `n` along one axis.
#[inline]
pub fn cell_center(i: usize, n: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / n as f64
}

pub fn make_hr_grid(h: usize, w: usize) -> Result<CoordinateGrid> {
    if h == 0 || w == 0 {
        return Err(Error::Shape(alloc::format!("grid {h}x{w} must be at least 1x1")));
    }
    let mut coords = Vec::with_capacity(h * w);
    for r in 0..h {
        let x = cell_center(r, h);
        for c in 0..w {
            coords.push([x, cell_center(c, w)]);
        }
    }
    Ok(CoordinateGrid { rows: h, cols: w, coords })
}

/// `d`-channel feature grid, stored channel-major (`[d][rows][cols]`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    d: usize,
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> FeatureMap<T> {
    pub fn from_channels(d: usize, rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != d * rows * cols || d == 0 || rows == 0 || cols == 0 {
            return Err(Error::Shape(alloc::format!(
                "{} values for a {rows}x{cols}x{d} feature map",
                values.len()
            )));
        }
        Ok(Self { d, rows, cols, values })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Channel-major values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Feature vector of one cell.
    pub fn at(&self, r: usize, c: usize) -> Vec<T> {
        let hw = self.rows * self.cols;
        (0..self.d).map(|ch| self.values[ch * hw + r * self.cols + c]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Bilinear taps of one query: four `(cell offset, weight)` pairs into a single channel plane.
pub type Taps = [(usize, f64); 4];

fn axis_taps(coord: f64, n: usize) -> (usize, usize, f64) {
    let pos = (((coord + 1.0) * n as f64 - 1.0) / 2.0).clamp(0.0, (n - 1) as f64);
    let i0 = libm::floor(pos) as usize;
    let i0 = i0.min(n - 1);
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, pos - i0 as f64)
}

/// Interpolation taps of every coordinate against a `rows x cols` grid. Coordinates between
/// the outermost cell centers and the border are clamped to the edge cells.
pub fn bilinear_taps(coords: &[[f64; 2]], rows: usize, cols: usize) -> Result<Vec<Taps>> {
    coords
        .iter()
        .map(|&[x, y]| {
            if !(-1.0..=1.0).contains(&x) || !(-1.0..=1.0).contains(&y) {
                return Err(Error::Coordinate(x, y));
            }
            let (r0, r1, fr) = axis_taps(x, rows);
            let (c0, c1, fc) = axis_taps(y, cols);
            Ok([
                (r0 * cols + c0, (1.0 - fr) * (1.0 - fc)),
                (r0 * cols + c1, (1.0 - fr) * fc),
                (r1 * cols + c0, fr * (1.0 - fc)),
                (r1 * cols + c1, fr * fc),
            ])
        })
        .collect()
}

/// Gather interpolated features into the first `fm.dim()` columns of each `stride`-wide row of
/// `out`.
pub(crate) fn gather<T: Scalar>(fm: &FeatureMap<T>, taps: &[Taps], out: &mut [T], stride: usize) {
    let hw = fm.rows * fm.cols;
    let weights: Vec<[T; 4]> = taps
        .iter()
        .map(|t| [T::of(t[0].1), T::of(t[1].1), T::of(t[2].1), T::of(t[3].1)])
        .collect();
    for (q, (t, w)) in taps.iter().zip(&weights).enumerate() {
        let row = &mut out[q * stride..q * stride + fm.d];
        for (ch, o) in row.iter_mut().enumerate() {
            let plane = &fm.values[ch * hw..];
            *o = w[0] * plane[t[0].0] + w[1] * plane[t[1].0] + w[2] * plane[t[2].0] + w[3] * plane[t[3].0];
        }
    }
}

/// Adjoint of [`gather`]: scatter per-query feature gradients back onto a channel-major grid.
pub(crate) fn scatter<T: Scalar>(
    taps: &[Taps],
    dfeat: &[T],
    stride: usize,
    d: usize,
    hw: usize,
    dfm: &mut [T],
) {
    for (q, t) in taps.iter().enumerate() {
        let g = &dfeat[q * stride..q * stride + d];
        for &(off, w) in t {
            if w == 0.0 {
                continue;
            }
            let w = T::of(w);
            for (ch, &gv) in g.iter().enumerate() {
                dfm[ch * hw + off] += w * gv;
            }
        }
    }
}

/// One interpolated `d`-vector per coordinate, row-major `[n][d]`.
pub fn query_features<T: Scalar>(fm: &FeatureMap<T>, coords: &[[f64; 2]]) -> Result<Vec<T>> {
    let taps = bilinear_taps(coords, fm.rows, fm.cols)?;
    let mut out = alloc::vec![T::zero(); coords.len() * fm.d];
    gather(fm, &taps, &mut out, fm.d);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grid_cell_centers() {
        let g = make_hr_grid(1, 1).unwrap();
        assert_eq!(g.coords(), &[[0.0, 0.0]]);
        let g = make_hr_grid(2, 2).unwrap();
        assert_eq!(g.coords(), &[[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]]);
        let g = make_hr_grid(4, 1).unwrap();
        let xs: Vec<f64> = g.coords().iter().map(|p| p[0]).collect();
        assert_eq!(xs, [-0.75, -0.25, 0.25, 0.75]);
        assert!(make_hr_grid(0, 3).is_err());
    }

    #[test]
    fn query_at_nodes_and_midpoints() {
        let (d, h, w) = (3, 4, 5);
        let vals: Vec<f64> = (0..d * h * w).map(|i| (i as f64 * 0.37).sin()).collect();
        let fm = FeatureMap::from_channels(d, h, w, vals).unwrap();
        let g = make_hr_grid(h, w).unwrap();
        let q = query_features(&fm, g.coords()).unwrap();
        for r in 0..h {
            for c in 0..w {
                let want = fm.at(r, c);
                for ch in 0..d {
                    assert!((q[(r * w + c) * d + ch] - want[ch]).abs() <= 1e-6);
                }
            }
        }
        let p = [cell_center(2, h), 0.5 * (cell_center(1, w) + cell_center(2, w))];
        let q = query_features(&fm, &[p]).unwrap();
        let (a, b) = (fm.at(2, 1), fm.at(2, 2));
        for ch in 0..d {
            assert!((q[ch] - 0.5 * (a[ch] + b[ch])).abs() <= 1e-6);
        }
    }

    #[test]
    fn border_clamps_and_range_is_checked() {
        let fm = FeatureMap::from_channels(1, 2, 2, vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let q = query_features(&fm, &[[-1.0, -1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(q, [1.0, 4.0]);
        assert_eq!(query_features(&fm, &[[1.5, 0.0]]), Err(Error::Coordinate(1.5, 0.0)));
    }

    #[test]
    fn scatter_is_adjoint_of_gather() {
        let (d, h, w) = (2, 3, 4);
        let vals: Vec<f64> = (0..d * h * w).map(|i| (i as f64 * 0.91).cos()).collect();
        let fm = FeatureMap::from_channels(d, h, w, vals.clone()).unwrap();
        let coords = [[-0.9, 0.3], [0.1, -0.2], [0.99, 0.99], [0.0, 0.0]];
        let taps = bilinear_taps(&coords, h, w).unwrap();
        let mut out = vec![0.0; coords.len() * d];
        gather(&fm, &taps, &mut out, d);
        let g: Vec<f64> = (0..out.len()).map(|i| i as f64 - 3.5).collect();
        let mut dfm = vec![0.0; vals.len()];
        scatter(&taps, &g, d, d, h * w, &mut dfm);
        let lhs: f64 = out.iter().zip(&g).map(|(a, b)| a * b).sum();
        let rhs: f64 = vals.iter().zip(&dfm).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
