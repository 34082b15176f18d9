//! 3D intensity volumes with physical voxel spacing.
//!
//! Data is stored C-order: the index of voxel `(i, j, k)` is `(i * d1 + j) * d2 + k`, so axis 2
//! varies fastest.
//!
//! A 2D slice perpendicular to axis `a` has its rows along the lower-index remaining axis and its
//! columns along the higher-index remaining axis. [`Volume::extract_slices`] and
//! [`Volume::stack_slices`] use this convention and are exact inverses.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

/// Relative tolerance for treating the two in-plane spacings as equal.
pub const IN_PLANE_TOLERANCE: f64 = 1e-6;

/// Intensity range recorded by [`Volume::normalize`] so the mapping can be undone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRange {
    pub min: f64,
    pub max: f64,
}

/// Orientation fields carried through IO untouched. The pipeline works in index space and never
/// interprets them.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Orientation {
    pub qform_code: i16,
    pub sform_code: i16,
    pub qfac: f32,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
}

impl Orientation {
    /// The same frame for a grid resampled from `from` to `to` spacing: the sform columns scale
    /// with the voxel size (the qform reads its scaling from the spacing itself).
    pub fn rescaled(&self, from: [f64; 3], to: [f64; 3]) -> Self {
        let mut out = *self;
        for row in out.srow.iter_mut() {
            for axis in 0..3 {
                row[axis] = (row[axis] as f64 * to[axis] / from[axis]) as f32;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    data: Vec<f32>,
    spacing: [f64; 3],
    norm: Option<NormRange>,
    orientation: Option<Orientation>,
}

/// Which axis is through-plane (low resolution) and which two are in-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRole {
    pub lr_axis: usize,
    /// Remaining axes in increasing order.
    pub hr_axes: [usize; 2],
    /// Through-plane spacing over in-plane spacing.
    pub scale: f64,
}

/// The two axes other than `axis`, lower index first.
pub fn other_axes(axis: usize) -> [usize; 2] {
    match axis {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// Spacing ratios are snapped to six decimals. Header spacings are stored in single precision,
/// so finer digits are noise, and snapping makes ratios such as 2.1 / 0.7 come out as exactly 3.
pub fn snap_ratio(ratio: f64) -> f64 {
    libm::round(ratio * 1e6) / 1e6
}

fn check_axis(axis: usize) -> Result<()> {
    if axis > 2 {
        Err(Error::Axis(axis))
    } else {
        Ok(())
    }
}

fn check_spacing(spacing: [f64; 3]) -> Result<()> {
    if spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
        Ok(())
    } else {
        Err(Error::Spacing(spacing))
    }
}

impl Volume {
    pub fn new(dims: [usize; 3], data: Vec<f32>, spacing: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Shape(format!("volume dims {dims:?} must all be >= 1")));
        }
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {dims:?} volume",
                data.len()
            )));
        }
        check_spacing(spacing)?;
        Ok(Self { dims, data, spacing, norm: None, orientation: None })
    }

    pub fn zeros(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        Self::new(dims, alloc::vec![0.0; dims[0] * dims[1] * dims[2]], spacing)
    }

    pub fn from_fn(
        dims: [usize; 3],
        spacing: [f64; 3],
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, data, spacing)
    }

    pub fn with_norm(mut self, norm: Option<NormRange>) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_orientation(mut self, orientation: Option<Orientation>) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Result<Self> {
        check_spacing(spacing)?;
        self.spacing = spacing;
        Ok(self)
    }

    /// Same metadata, new data and dims. The orientation follows a change of spacing.
    pub(crate) fn with_data(&self, dims: [usize; 3], data: Vec<f32>, spacing: [f64; 3]) -> Result<Self> {
        let orientation = match self.orientation {
            Some(o) if spacing != self.spacing => Some(o.rescaled(self.spacing, spacing)),
            o => o,
        };
        Ok(Self::new(dims, data, spacing)?
            .with_norm(self.norm)
            .with_orientation(orientation))
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn norm(&self) -> Option<NormRange> {
        self.norm
    }

    pub fn orientation(&self) -> Option<Orientation> {
        self.orientation
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.data[self.index(i, j, k)]
    }

    /// Element strides of each axis in `data`.
    pub fn strides(&self) -> [usize; 3] {
        [self.dims[1] * self.dims[2], self.dims[2], 1]
    }

    pub fn range(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Min-max rescale to `[0, 1]`.
    ///
    /// If the volume is already normalized the new range is composed with the recorded one, so
    /// [`Volume::denormalize`] always returns to the original intensity frame.
    pub fn normalize(&self) -> Result<Self> {
        let (lo, hi) = self.range();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NonFinite("volume"));
        }
        if hi <= lo {
            return Err(Error::ConstantVolume);
        }
        let (lo, hi) = (lo as f64, hi as f64);
        let width = hi - lo;
        let data = self
            .data
            .iter()
            .map(|&v| (((v as f64) - lo) / width).clamp(0.0, 1.0) as f32)
            .collect();
        let norm = match self.norm {
            None => NormRange { min: lo, max: hi },
            Some(prev) => {
                let w = prev.max - prev.min;
                NormRange { min: prev.min + lo * w, max: prev.min + hi * w }
            }
        };
        let mut out = self.with_data(self.dims, data, self.spacing)?;
        out.norm = Some(norm);
        Ok(out)
    }

    /// Undo [`Volume::normalize`]; returns the volume unchanged when no range is recorded.
    pub fn denormalize(&self) -> Self {
        match self.norm {
            None => self.clone(),
            Some(n) => {
                let w = n.max - n.min;
                let mut out = self.clone();
                for v in out.data.iter_mut() {
                    *v = ((*v as f64) * w + n.min) as f32;
                }
                out.norm = None;
                out
            }
        }
    }

    /// Express this volume's intensities in the normalized frame of `target`, the range another
    /// volume was normalized with. Values are not clipped.
    pub fn renormalize_to(&self, target: NormRange) -> Self {
        let raw = self.denormalize();
        let w = target.max - target.min;
        let mut out = raw;
        for v in out.data.iter_mut() {
            *v = (((*v as f64) - target.min) / w) as f32;
        }
        out.norm = Some(target);
        out
    }

    pub fn extract_slice(&self, axis: usize, index: usize) -> Result<Image<f32>> {
        check_axis(axis)?;
        if index >= self.dims[axis] {
            return Err(Error::Shape(format!(
                "slice {index} out of range for axis {axis} of length {}",
                self.dims[axis]
            )));
        }
        let [ra, ca] = other_axes(axis);
        let strides = self.strides();
        let base = index * strides[axis];
        let (rs, cs) = (strides[ra], strides[ca]);
        Ok(Image::from_fn(self.dims[ra], self.dims[ca], |r, c| self.data[base + r * rs + c * cs]))
    }

    /// All cross-sections perpendicular to `axis`, in index order.
    pub fn extract_slices(&self, axis: usize) -> Result<Vec<Image<f32>>> {
        check_axis(axis)?;
        (0..self.dims[axis]).map(|i| self.extract_slice(axis, i)).collect()
    }

    /// Inverse of [`Volume::extract_slices`]. Norm and orientation are not set.
    pub fn stack_slices(slices: &[Image<f32>], axis: usize, spacing: [f64; 3]) -> Result<Self> {
        check_axis(axis)?;
        let first = slices
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero slices".into()))?;
        let (rows, cols) = first.shape();
        let [ra, ca] = other_axes(axis);
        let mut dims = [0; 3];
        dims[axis] = slices.len();
        dims[ra] = rows;
        dims[ca] = cols;
        let mut out = Self::zeros(dims, spacing)?;
        let strides = out.strides();
        for (idx, s) in slices.iter().enumerate() {
            if s.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "slice {idx} has shape {:?}, expected {:?}",
                    s.shape(),
                    (rows, cols)
                )));
            }
            let base = idx * strides[axis];
            for r in 0..rows {
                for c in 0..cols {
                    out.data[base + r * strides[ra] + c * strides[ca]] = s.get(r, c);
                }
            }
        }
        Ok(out)
    }

    /// Apply `f` to every 1D line running along `axis`. `f` receives the input line and must
    /// return a line of length `out_len`; the result has `dims[axis] = out_len`.
    pub fn map_lines(
        &self,
        axis: usize,
        out_len: usize,
        mut f: impl FnMut(&[f32], &mut [f32]),
    ) -> Result<Self> {
        check_axis(axis)?;
        if out_len == 0 {
            return Err(Error::Shape("output line length must be >= 1".into()));
        }
        let n = self.dims[axis];
        let mut out_dims = self.dims;
        out_dims[axis] = out_len;
        let in_strides = self.strides();
        let out_strides = [out_dims[1] * out_dims[2], out_dims[2], 1];
        let [a0, a1] = other_axes(axis);
        let mut out = alloc::vec![0.0f32; out_dims[0] * out_dims[1] * out_dims[2]];
        let mut line = alloc::vec![0.0f32; n];
        let mut res = alloc::vec![0.0f32; out_len];
        for u in 0..self.dims[a0] {
            for v in 0..self.dims[a1] {
                let ib = u * in_strides[a0] + v * in_strides[a1];
                for (t, x) in line.iter_mut().enumerate() {
                    *x = self.data[ib + t * in_strides[axis]];
                }
                f(&line, &mut res);
                let ob = u * out_strides[a0] + v * out_strides[a1];
                for (t, &x) in res.iter().enumerate() {
                    out[ob + t * out_strides[axis]] = x;
                }
            }
        }
        self.with_data(out_dims, out, self.spacing)
    }
}

/// Identify the through-plane axis and the spacing ratio.
///
/// Fails when no axis has a strictly largest spacing, or when the two in-plane spacings differ
/// by more than [`IN_PLANE_TOLERANCE`] relative.
pub fn detect_axis_role(volume: &Volume) -> Result<AxisRole> {
    let s = volume.spacing();
    let lr_axis = (0..3)
        .max_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap_or(core::cmp::Ordering::Equal))
        .unwrap_or(0);
    let hr_axes = other_axes(lr_axis);
    if hr_axes.iter().any(|&a| s[a] >= s[lr_axis]) {
        return Err(Error::AmbiguousAnisotropy(s));
    }
    let (p, q) = (s[hr_axes[0]], s[hr_axes[1]]);
    if libm::fabs(p - q) > IN_PLANE_TOLERANCE * p.max(q) {
        return Err(Error::UnequalInPlane(p, q));
    }
    Ok(AxisRole { lr_axis, hr_axes, scale: snap_ratio(s[lr_axis] / p) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ramp(dims: [usize; 3]) -> Volume {
        Volume::from_fn(dims, [1.0, 1.0, 1.0], |i, j, k| (i * 100 + j * 10 + k) as f32).unwrap()
    }

    #[test]
    fn detects_table_spacings() {
        let v = Volume::zeros([2, 2, 2], [1.40, 0.70, 0.70]).unwrap();
        let role = detect_axis_role(&v).unwrap();
        assert_eq!(role.lr_axis, 0);
        assert_eq!(role.hr_axes, [1, 2]);
        assert_eq!(role.scale, 2.0);

        let v = Volume::zeros([2, 2, 2], [0.70, 0.70, 2.10]).unwrap();
        let role = detect_axis_role(&v).unwrap();
        assert_eq!(role.lr_axis, 2);
        assert_eq!(role.scale, 3.0);

        let v = Volume::zeros([2, 2, 2], [0.70, 1.75, 0.70]).unwrap();
        assert_eq!(detect_axis_role(&v).unwrap().scale, 2.5);
    }

    #[test]
    fn isotropic_and_tied_spacing_rejected() {
        let v = Volume::zeros([4, 4, 4], [1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(detect_axis_role(&v), Err(Error::AmbiguousAnisotropy(_))));
        let v = Volume::zeros([4, 4, 4], [2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(detect_axis_role(&v), Err(Error::AmbiguousAnisotropy(_))));
        let v = Volume::zeros([4, 4, 4], [3.0, 1.0, 1.2]).unwrap();
        assert!(matches!(detect_axis_role(&v), Err(Error::UnequalInPlane(..))));
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Volume::new([0, 2, 2], vec![], [1.0; 3]).is_err());
        assert!(Volume::new([2, 2, 2], vec![0.0; 7], [1.0; 3]).is_err());
        assert!(Volume::zeros([2, 2, 2], [1.0, -1.0, 1.0]).is_err());
        assert!(Volume::zeros([2, 2, 2], [1.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn slice_orientation_convention() {
        let v = ramp([3, 4, 5]);
        let s = v.extract_slice(1, 2).unwrap();
        // rows along axis 0, columns along axis 2
        assert_eq!(s.shape(), (3, 5));
        assert_eq!(s.get(1, 3), v.get(1, 2, 3));
        let s = v.extract_slice(0, 1).unwrap();
        assert_eq!(s.shape(), (4, 5));
        assert_eq!(s.get(3, 4), v.get(1, 3, 4));
        let s = v.extract_slice(2, 4).unwrap();
        assert_eq!(s.shape(), (3, 4));
        assert_eq!(s.get(2, 3), v.get(2, 3, 4));
        assert!(v.extract_slices(3).is_err());
    }

    #[test]
    fn extract_counts_match_paper_example() {
        let v = Volume::zeros([35, 200, 200], [2.0, 1.0, 1.0]).unwrap();
        let slices = v.extract_slices(0).unwrap();
        assert_eq!(slices.len(), 35);
        assert!(slices.iter().all(|s| s.shape() == (200, 200)));
    }

    #[test]
    fn zero_volume_slices() {
        let v = Volume::zeros([4, 4, 4], [1.0; 3]).unwrap();
        for axis in 0..3 {
            let s = v.extract_slices(axis).unwrap();
            assert_eq!(s.len(), 4);
            assert!(s.iter().all(|s| s.shape() == (4, 4) && s.data().iter().all(|&x| x == 0.0)));
        }
    }

    #[test]
    fn extract_stack_round_trip() {
        let v = ramp([5, 6, 7]);
        for axis in 0..3 {
            let s = v.extract_slices(axis).unwrap();
            let back = Volume::stack_slices(&s, axis, v.spacing()).unwrap();
            assert_eq!(back.dims(), v.dims());
            assert_eq!(back.data(), v.data());
        }
    }

    #[test]
    fn normalize_maps_to_unit_range() {
        let v = Volume::from_fn([4, 4, 4], [1.0; 3], |i, j, k| ((i * 16 + j * 4 + k) * 65) as f32)
            .unwrap();
        let n = v.normalize().unwrap();
        assert_eq!(n.norm(), Some(NormRange { min: 0.0, max: 4095.0 }));
        assert_eq!(n.range(), (0.0, 1.0));
        let twice = n.normalize().unwrap();
        assert_eq!(twice.data(), n.data());
        assert_eq!(twice.norm(), n.norm());
        let back = twice.denormalize();
        for (a, b) in back.data().iter().zip(v.data()) {
            assert!((a - b).abs() <= 1e-6 * 4095.0);
        }
    }

    #[test]
    fn normalize_unit_data_is_unchanged() {
        let v = Volume::from_fn([2, 2, 2], [1.0; 3], |i, j, k| ((i + j + k) as f32) / 3.0).unwrap();
        let n = v.normalize().unwrap();
        assert_eq!(n.data(), v.data());
        assert_eq!(n.norm(), Some(NormRange { min: 0.0, max: 1.0 }));
    }

    #[test]
    fn constant_volume_cannot_normalize() {
        let v = Volume::new([2, 2, 2], vec![3.0; 8], [1.0; 3]).unwrap();
        assert_eq!(v.normalize(), Err(Error::ConstantVolume));
    }

    #[test]
    fn map_lines_along_each_axis() {
        let v = ramp([3, 4, 5]);
        for axis in 0..3 {
            let out = v.map_lines(axis, 1, |line, o| o[0] = line.iter().sum()).unwrap();
            let mut dims = v.dims();
            dims[axis] = 1;
            assert_eq!(out.dims(), dims);
        }
        let out = v.map_lines(1, 1, |line, o| o[0] = line.iter().sum()).unwrap();
        assert_eq!(out.get(2, 0, 3), (0..4).map(|j| v.get(2, j, 3)).sum::<f32>());
    }
}
