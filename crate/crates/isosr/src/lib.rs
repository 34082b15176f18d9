//! File formats, configuration and the command-line pipeline around `isosr_core`.
//!
//! Volumes are read from and written to NIfTI-1 (`.nii`, `.nii.gz`); datasets, checkpoints and the
//! perceptual backbone use small self-describing binary formats defined here. [`pipeline`] holds
//! the stages behind each subcommand of the `isosr` binary.

pub mod array_file;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset_dir;
pub mod error;
pub mod nifti;
pub mod perceptual;
pub mod pipeline;
pub mod report;
pub mod synthetic;
pub mod tensor_file;
pub mod train_log;
pub mod volume_io;

pub use error::{IoError, Result};
pub use isosr_core;
