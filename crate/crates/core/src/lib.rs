//! Self-supervised arbitrary-scale super-resolution for anisotropic MR volumes.
//!
//! The pipeline has three stages:
//!
//! 1. [`dataset`] turns anisotropic volumes into paired HR/LR 2D slices. HR slices are the raw
//!    in-plane cross-sections (never resized); LR partners are degraded along slice axis 0 by
//!    each volume's own through-plane/in-plane spacing ratio.
//! 2. [`nn`] holds the continuous-coordinate slice model: a residual CNN encoder produces a
//!    feature map, features are bilinearly queried at arbitrary HR coordinates in `[-1, 1]^2`,
//!    and an MLP decodes `feature ++ coordinate` into an intensity. Training minimizes L1 over
//!    randomly sampled HR coordinates with Adam.
//! 3. [`reconstruct`] upsamples the LR slices of both in-plane views, stacks each view back into
//!    a volume and averages the two.
//!
//! [`eval`] provides anisotropic simulation, PSNR/SSIM, the central-slice perceptual protocol and
//! the cubic-spline baseline.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature to let the GEMM backend use
//! runtime CPU feature detection.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod degrade;
pub mod error;
pub mod eval;
pub mod image;
pub mod nn;
pub mod reconstruct;
pub mod volume;

pub use dataset::{build_dataset, build_pairs_from_volume, ManifestEntry, SRDataset, SlicePair};
pub use degrade::simulate_lr;
pub use error::{Error, Result};
pub use image::Image;
pub use nn::{ModelConfig, SRModel, TrainConfig};
pub use volume::{detect_axis_role, AxisRole, NormRange, Orientation, Volume};
