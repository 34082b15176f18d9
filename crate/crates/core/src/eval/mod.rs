//! Anisotropic simulation, image-quality metrics and the cubic-spline baseline.

pub mod cubic;
pub mod metrics;
pub mod perceptual;
pub mod simulate;

pub use cubic::cubic_upsample;
pub use metrics::{evaluate_sr, psnr, reconcile_shapes, ssim, DepthAdjustment, Evaluation, MetricsRecord, Samples};
pub use perceptual::{central_indices, lpips_protocol, LpipsReport, PerceptualBackbone, RgbImage, SliceDistance};
pub use simulate::simulate_anisotropic;

/// Conventional name of a volume axis.
pub fn view_name(axis: usize) -> &'static str {
    match axis {
        0 => "sagittal",
        1 => "coronal",
        2 => "axial",
        _ => "unknown",
    }
}
