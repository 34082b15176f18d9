//! Volumes on disk: a NIfTI-1 image plus an optional TOML sidecar holding the normalization
//! range, written next to it as `<stem>.norm.toml`.

use std::path::{Path, PathBuf};

use isosr_core::{NormRange, Volume};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};
use crate::nifti::{read_nifti, write_nifti};

#[derive(Debug, Serialize, Deserialize)]
struct NormSidecar {
    norm_min: f64,
    norm_max: f64,
}

/// File name without `.nii` / `.nii.gz`.
pub fn volume_stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for ext in [".nii.gz", ".nii"] {
        if let Some(stem) = name.strip_suffix(ext) {
            return stem.to_string();
        }
    }
    path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or(name)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_file_name(format!("{}.norm.toml", volume_stem(path)))
}

/// Load a volume; the normalization range is restored from the sidecar if one exists.
pub fn load_volume(path: &Path) -> Result<Volume> {
    let volume = read_nifti(path)?;
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(volume);
    }
    let text = std::fs::read_to_string(&side).map_err(|e| IoError::io(&side, e))?;
    let s: NormSidecar = toml::from_str(&text).map_err(|e| IoError::format(&side, e.to_string()))?;
    if !(s.norm_min.is_finite() && s.norm_max.is_finite() && s.norm_max > s.norm_min) {
        return Err(IoError::format(&side, format!("invalid range [{}, {}]", s.norm_min, s.norm_max)));
    }
    Ok(volume.with_norm(Some(NormRange { min: s.norm_min, max: s.norm_max })))
}

/// Save a volume; writes the sidecar when a normalization range is recorded and removes a stale
/// one otherwise.
pub fn save_volume(volume: &Volume, path: &Path) -> Result<()> {
    write_nifti(volume, path)?;
    let side = sidecar_path(path);
    match volume.norm() {
        Some(n) => {
            let text = toml::to_string(&NormSidecar { norm_min: n.min, norm_max: n.max })
                .map_err(|e| IoError::format(&side, e.to_string()))?;
            std::fs::write(&side, text).map_err(|e| IoError::io(&side, e))
        }
        None if side.exists() => std::fs::remove_file(&side).map_err(|e| IoError::io(&side, e)),
        None => Ok(()),
    }
}

/// Bring a loaded volume into a `[0, 1]` frame: volumes that carry a range are already normalized
/// and kept as they are, others are min-max normalized.
pub fn ensure_normalized(volume: Volume) -> Result<Volume> {
    if volume.norm().is_some() {
        Ok(volume)
    } else {
        Ok(volume.normalize()?)
    }
}
