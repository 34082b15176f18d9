//! PSNR and SSIM for data in `[0, 1]`.
//!
//! SSIM uses a uniform 7-sample window along every axis longer than one sample (7x7 for images,
//! 7x7x7 for volumes), only at positions where the window fits entirely, with population
//! (biased) variances and `C1 = 0.01^2`, `C2 = 0.03^2`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::perceptual::{lpips_protocol, LpipsReport, PerceptualBackbone};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::volume::Volume;

pub const SSIM_WINDOW: usize = 7;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Arrays the metrics accept: images are treated as `1 x rows x cols` volumes.
pub trait Samples {
    fn dims3(&self) -> [usize; 3];
    fn samples(&self) -> &[f32];
}

impl Samples for Image<f32> {
    fn dims3(&self) -> [usize; 3] {
        [1, self.rows(), self.cols()]
    }

    fn samples(&self) -> &[f32] {
        self.data()
    }
}

impl Samples for Volume {
    fn dims3(&self) -> [usize; 3] {
        self.dims()
    }

    fn samples(&self) -> &[f32] {
        self.data()
    }
}

fn same_shape<A: Samples + ?Sized>(a: &A, b: &A) -> Result<()> {
    if a.dims3() != b.dims3() {
        return Err(Error::Shape(format!("shape mismatch: {:?} vs {:?}", a.dims3(), b.dims3())));
    }
    Ok(())
}

/// `10 log10(1 / MSE)`; identical inputs give `f64::INFINITY`.
pub fn psnr<A: Samples + ?Sized>(a: &A, b: &A) -> Result<f64> {
    same_shape(a, b)?;
    let n = a.samples().len();
    let sse: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sse / n as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * libm::log10(mse))
}

/// Sliding-window sums of length `win[a]` along each axis, valid positions only.
fn box_sums(data: &[f64], dims: [usize; 3], win: [usize; 3]) -> (Vec<f64>, [usize; 3]) {
    let mut cur = data.to_vec();
    let mut cd = dims;
    for axis in 0..3 {
        let w = win[axis];
        if w == 1 {
            continue;
        }
        let mut nd = cd;
        nd[axis] = cd[axis] - w + 1;
        let in_strides = [cd[1] * cd[2], cd[2], 1];
        let out_strides = [nd[1] * nd[2], nd[2], 1];
        let mut out = vec![0.0; nd[0] * nd[1] * nd[2]];
        let others: [usize; 2] = match axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        for u in 0..cd[others[0]] {
            for v in 0..cd[others[1]] {
                let ib = u * in_strides[others[0]] + v * in_strides[others[1]];
                let ob = u * out_strides[others[0]] + v * out_strides[others[1]];
                let at = |t: usize| cur[ib + t * in_strides[axis]];
                let mut s: f64 = (0..w).map(at).sum();
                out[ob] = s;
                for t in 1..nd[axis] {
                    s += at(t + w - 1) - at(t - 1);
                    out[ob + t * out_strides[axis]] = s;
                }
            }
        }
        cur = out;
        cd = nd;
    }
    (cur, cd)
}

/// Mean local SSIM. Every axis longer than one sample must be at least [`SSIM_WINDOW`] long.
pub fn ssim<A: Samples + ?Sized>(a: &A, b: &A) -> Result<f64> {
    same_shape(a, b)?;
    let dims = a.dims3();
    let mut win = [1; 3];
    for axis in 0..3 {
        if dims[axis] > 1 {
            if dims[axis] < SSIM_WINDOW {
                return Err(Error::Shape(format!(
                    "SSIM window {SSIM_WINDOW} larger than axis {axis} of length {}",
                    dims[axis]
                )));
            }
            win[axis] = SSIM_WINDOW;
        }
    }
    let x: Vec<f64> = a.samples().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.samples().iter().map(|&v| v as f64).collect();
    let prod = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(u, v)| u * v).collect() };
    let (sx, _) = box_sums(&x, dims, win);
    let (sy, _) = box_sums(&y, dims, win);
    let (sxx, _) = box_sums(&prod(&x, &x), dims, win);
    let (syy, _) = box_sums(&prod(&y, &y), dims, win);
    let (sxy, _) = box_sums(&prod(&x, &y), dims, win);
    let count = (win[0] * win[1] * win[2]) as f64;
    let mut total = 0.0;
    for i in 0..sx.len() {
        let mx = sx[i] / count;
        let my = sy[i] / count;
        let vx = sxx[i] / count - mx * mx;
        let vy = syy[i] / count - my * my;
        let cxy = sxy[i] / count - mx * my;
        total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2))
            / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    Ok(total / sx.len() as f64)
}

/// Crop or edge-pad applied to an SR volume to match the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthAdjustment {
    pub axis: usize,
    pub from: usize,
    pub to: usize,
}

/// Make `sr` match `gt`'s dims when they differ by at most one sample along a single axis
/// (depth rounding). Extra trailing slices are cropped, a missing one repeats the last slice.
pub fn reconcile_shapes(sr: &Volume, gt: &Volume) -> Result<(Volume, Option<DepthAdjustment>)> {
    let (sd, gd) = (sr.dims(), gt.dims());
    if sd == gd {
        return Ok((sr.clone(), None));
    }
    let diff: Vec<usize> = (0..3).filter(|&a| sd[a] != gd[a]).collect();
    if diff.len() != 1 || sd[diff[0]].abs_diff(gd[diff[0]]) > 1 {
        return Err(Error::Shape(format!("cannot reconcile SR dims {sd:?} with ground truth {gd:?}")));
    }
    let axis = diff[0];
    let mut slices = sr.extract_slices(axis)?;
    slices.truncate(gd[axis]);
    while slices.len() < gd[axis] {
        let last = slices[slices.len() - 1].clone();
        slices.push(last);
    }
    let out = Volume::stack_slices(&slices, axis, sr.spacing())?
        .with_norm(sr.norm())
        .with_orientation(sr.orientation());
    Ok((out, Some(DepthAdjustment { axis, from: sd[axis], to: gd[axis] })))
}

/// Metrics of one SR volume against its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub psnr: f64,
    pub ssim: f64,
    /// Absent when no perceptual backbone is available.
    pub lpips: Option<LpipsReport>,
}

/// PSNR, SSIM and (with a backbone) the central-slice perceptual distance. Shapes must match;
/// use [`reconcile_shapes`] first for off-by-one depths.
pub fn evaluate_sr(sr: &Volume, gt: &Volume, backbone: Option<&dyn PerceptualBackbone>) -> Result<Evaluation> {
    let lpips = match backbone {
        Some(b) => Some(lpips_protocol(sr, gt, b)?),
        None => None,
    };
    Ok(Evaluation { psnr: psnr(sr, gt)?, ssim: ssim(sr, gt)?, lpips })
}

impl Evaluation {
    pub fn record(&self, subject: &str, method: &str, scale: f64, view: usize) -> MetricsRecord {
        MetricsRecord {
            subject: subject.into(),
            method: method.into(),
            scale,
            view,
            psnr: self.psnr,
            ssim: self.ssim,
            lpips: self.lpips.as_ref().map(|l| l.mean),
        }
    }
}

/// One row of the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub subject: String,
    pub method: String,
    pub scale: f64,
    /// Axis the input was degraded along.
    pub view: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub lpips: Option<f64>,
}

impl MetricsRecord {
    pub const HEADER: &'static str = "subject\tmethod\tscale\tview\tpsnr_db\tssim\tlpips";

    /// Tab-separated row matching [`MetricsRecord::HEADER`]. Infinite PSNR prints as `inf`, an
    /// absent LPIPS as `NA`.
    pub fn to_row(&self) -> String {
        let psnr = if self.psnr.is_infinite() { "inf".into() } else { format!("{:.4}", self.psnr) };
        let lpips = self.lpips.map_or_else(|| "NA".into(), |v| format!("{v:.4}"));
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{}",
            self.subject,
            self.method,
            self.scale,
            super::view_name(self.view),
            psnr,
            self.ssim,
            lpips
        )
    }
}
