//! Isotropic reconstruction by super-resolving both in-plane views and averaging.
//!
//! For an input with through-plane axis `a` and in-plane spacing `s`, each in-plane axis `v`
//! yields `dims[v]` slices that contain axis `a`. Each slice is oriented so `a` is its axis 0,
//! upsampled to `target_depth` rows, oriented back and stacked along `v`. The two stacks are
//! averaged voxelwise and clipped to `[0, 1]`.
//!
//! The input is expected to be normalized already; intensities are not rescaled here.

use alloc::format;
use alloc::vec::Vec;

use crate::degrade::round_half_even;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::nn::grid::{bilinear_taps, make_hr_grid};
use crate::nn::SRModel;
use crate::volume::{detect_axis_role, other_axes, Volume};

/// Anything that can upsample a 2D slice along its axis 0 to a requested shape.
pub trait SliceUpsampler {
    fn upsample(&self, lr: &Image<f32>, target: (usize, usize)) -> Result<Image<f32>>;
}

impl SliceUpsampler for SRModel<f32> {
    fn upsample(&self, lr: &Image<f32>, target: (usize, usize)) -> Result<Image<f32>> {
        self.forward(lr, target)
    }
}

impl<U: SliceUpsampler + ?Sized> SliceUpsampler for &U {
    fn upsample(&self, lr: &Image<f32>, target: (usize, usize)) -> Result<Image<f32>> {
        (**self).upsample(lr, target)
    }
}

/// Bilinear interpolation on the same normalized cell-center grid the model queries.
#[derive(Debug, Clone, Copy, Default)]
pub struct BilinearUpsampler;

impl SliceUpsampler for BilinearUpsampler {
    fn upsample(&self, lr: &Image<f32>, target: (usize, usize)) -> Result<Image<f32>> {
        let grid = make_hr_grid(target.0, target.1)?;
        let taps = bilinear_taps(grid.coords(), lr.rows(), lr.cols())?;
        let data = taps
            .iter()
            .map(|t| t.iter().map(|&(i, w)| w * lr.data()[i] as f64).sum::<f64>() as f32)
            .collect();
        Image::from_vec(target.0, target.1, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionPlan {
    pub lr_axis: usize,
    pub hr_axes: [usize; 2],
    /// Through-plane spacing over in-plane spacing.
    pub scale: f64,
    pub in_plane_spacing: f64,
    pub input_dims: [usize; 3],
    /// `round(dims[lr_axis] * scale)`, ties to even; shared by both views.
    pub target_depth: usize,
}

impl ReconstructionPlan {
    pub fn output_dims(&self) -> [usize; 3] {
        let mut d = self.input_dims;
        d[self.lr_axis] = self.target_depth;
        d
    }

    pub fn output_spacing(&self) -> [f64; 3] {
        [self.in_plane_spacing; 3]
    }

    /// Whether slices cut perpendicular to `view_axis` have the LR axis as their columns and
    /// must be transposed before upsampling.
    fn needs_transpose(&self, view_axis: usize) -> bool {
        other_axes(view_axis)[0] != self.lr_axis
    }
}

pub fn plan_reconstruction(volume: &Volume) -> Result<ReconstructionPlan> {
    let role = detect_axis_role(volume)?;
    let dims = volume.dims();
    let target_depth = round_half_even(dims[role.lr_axis] as f64 * role.scale) as usize;
    Ok(ReconstructionPlan {
        lr_axis: role.lr_axis,
        hr_axes: role.hr_axes,
        scale: role.scale,
        in_plane_spacing: volume.spacing()[role.hr_axes[0]],
        input_dims: dims,
        target_depth: target_depth.max(dims[role.lr_axis]),
    })
}

/// LR slices of one view, oriented with the through-plane axis as axis 0, plus their target
/// shape.
pub fn view_inputs(
    volume: &Volume,
    plan: &ReconstructionPlan,
    view_axis: usize,
) -> Result<(Vec<Image<f32>>, (usize, usize))> {
    if !plan.hr_axes.contains(&view_axis) {
        return Err(Error::Shape(format!(
            "view axis {view_axis} is not an in-plane axis ({:?})",
            plan.hr_axes
        )));
    }
    if volume.dims() != plan.input_dims {
        return Err(Error::Shape(format!(
            "volume dims {:?} do not match plan {:?}",
            volume.dims(),
            plan.input_dims
        )));
    }
    let transpose = plan.needs_transpose(view_axis);
    let slices = volume
        .extract_slices(view_axis)?
        .into_iter()
        .map(|s| if transpose { s.transpose() } else { s })
        .collect();
    let other = plan.hr_axes[0] + plan.hr_axes[1] - view_axis;
    Ok((slices, (plan.target_depth, plan.input_dims[other])))
}

/// Stack upsampled slices (in the orientation produced by [`view_inputs`]) back into a volume.
pub fn assemble_view(
    volume: &Volume,
    plan: &ReconstructionPlan,
    view_axis: usize,
    upsampled: Vec<Image<f32>>,
) -> Result<Volume> {
    let transpose = plan.needs_transpose(view_axis);
    let slices: Vec<Image<f32>> = upsampled
        .into_iter()
        .map(|s| if transpose { s.transpose() } else { s })
        .collect();
    let out = Volume::stack_slices(&slices, view_axis, plan.output_spacing())?;
    if out.dims() != plan.output_dims() {
        return Err(Error::Shape(format!(
            "view {view_axis} produced {:?}, plan expects {:?}",
            out.dims(),
            plan.output_dims()
        )));
    }
    let orientation = volume.orientation().map(|o| o.rescaled(volume.spacing(), plan.output_spacing()));
    Ok(out.with_norm(volume.norm()).with_orientation(orientation))
}

/// Super-resolve every LR slice of one in-plane view and stack the results.
pub fn reconstruct_view(
    volume: &Volume,
    model: &impl SliceUpsampler,
    view_axis: usize,
) -> Result<Volume> {
    let plan = plan_reconstruction(volume)?;
    let (inputs, target) = view_inputs(volume, &plan, view_axis)?;
    let upsampled = inputs
        .iter()
        .map(|s| model.upsample(s, target))
        .collect::<Result<Vec<_>>>()?;
    assemble_view(volume, &plan, view_axis, upsampled)
}

/// Voxelwise mean of the two view volumes, clipped to `[0, 1]`.
pub fn average_views(a: &Volume, b: &Volume) -> Result<Volume> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("view dims differ: {:?} vs {:?}", a.dims(), b.dims())));
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (0.5 * (x + y)).clamp(0.0, 1.0))
        .collect();
    a.with_data(a.dims(), data, a.spacing())
}

pub fn reconstruct_isotropic(volume: &Volume, model: &impl SliceUpsampler) -> Result<Volume> {
    let plan = plan_reconstruction(volume)?;
    let a = reconstruct_view(volume, model, plan.hr_axes[0])?;
    let b = reconstruct_view(volume, model, plan.hr_axes[1])?;
    average_views(&a, &b)
}
