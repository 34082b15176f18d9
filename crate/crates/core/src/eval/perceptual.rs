//! Slice-wise perceptual distance over the central slices of each axis.
//!
//! The perceptual network itself is external: callers supply a [`PerceptualBackbone`]. Grayscale
//! slices are replicated into three channels before being handed over.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::volume::Volume;

/// Slices taken per axis.
pub const SLICES_PER_AXIS: usize = 10;

pub type RgbImage = Image<[f32; 3]>;

pub trait PerceptualBackbone {
    fn name(&self) -> &str;
    /// Distance between two equally sized RGB images with values in `[0, 1]`; 0 for identical
    /// inputs.
    fn distance(&self, a: &RgbImage, b: &RgbImage) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceDistance {
    pub axis: usize,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpipsReport {
    pub backbone: alloc::string::String,
    /// One entry per compared slice, axis-major.
    pub per_slice: Vec<SliceDistance>,
    pub mean: f64,
}

/// The ten most central indices of an axis of length `dim`: `mid - 5 .. mid + 4` with
/// `mid = dim / 2`.
pub fn central_indices(dim: usize) -> Result<core::ops::Range<usize>> {
    if dim < SLICES_PER_AXIS {
        return Err(Error::Shape(format!("axis of length {dim} has fewer than {SLICES_PER_AXIS} slices")));
    }
    let mid = dim / 2;
    Ok(mid - 5..mid + 5)
}

pub fn to_rgb(img: &Image<f32>) -> RgbImage {
    img.map(|v| [v, v, v])
}

pub fn lpips_protocol(sr: &Volume, gt: &Volume, backbone: &dyn PerceptualBackbone) -> Result<LpipsReport> {
    if sr.dims() != gt.dims() {
        return Err(Error::Shape(format!("shape mismatch: {:?} vs {:?}", sr.dims(), gt.dims())));
    }
    let mut per_slice = Vec::with_capacity(3 * SLICES_PER_AXIS);
    for axis in 0..3 {
        for index in central_indices(sr.dims()[axis])? {
            let a = to_rgb(&sr.extract_slice(axis, index)?);
            let b = to_rgb(&gt.extract_slice(axis, index)?);
            per_slice.push(SliceDistance { axis, index, value: backbone.distance(&a, &b)? });
        }
    }
    let mean = per_slice.iter().map(|s| s.value).sum::<f64>() / per_slice.len() as f64;
    Ok(LpipsReport { backbone: backbone.name().into(), per_slice, mean })
}
