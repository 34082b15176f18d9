//! Paired HR/LR slice dataset built from the anisotropic volumes themselves.
//!
//! For each volume the HR slices are the raw cross-sections perpendicular to the through-plane
//! axis, kept at their native size. Slice axis 0 is the lower-index in-plane volume axis; the LR
//! partner is that slice degraded along axis 0 by the volume's spacing ratio. Slices of different
//! shapes and scales coexist in one dataset.

use alloc::format;
use alloc::vec::Vec;

use crate::degrade::{degraded_len, simulate_lr};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::volume::{detect_axis_role, Volume};

/// Slices whose intensity range is below this (after normalization) carry no signal and are
/// left out.
pub const BACKGROUND_THRESHOLD: f32 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SlicePair {
    hr: Image<f32>,
    lr: Image<f32>,
    scale: f64,
    source_id: usize,
}

impl SlicePair {
    pub fn new(hr: Image<f32>, lr: Image<f32>, scale: f64, source_id: usize) -> Result<Self> {
        if !(scale.is_finite() && scale > 1.0) {
            return Err(Error::Scale(scale));
        }
        let expect = (degraded_len(hr.rows(), scale), hr.cols());
        if lr.shape() != expect || expect.0 < 2 {
            return Err(Error::Shape(format!(
                "lr shape {:?} does not match hr {:?} at scale {scale} (expected {expect:?})",
                lr.shape(),
                hr.shape()
            )));
        }
        Ok(Self { hr, lr, scale, source_id })
    }

    /// Degrade `hr` by `scale` to make its LR partner.
    pub fn synthesize(hr: Image<f32>, scale: f64, source_id: usize) -> Result<Self> {
        let lr = simulate_lr(&hr, scale)?;
        Self::new(hr, lr, scale, source_id)
    }

    pub fn hr(&self) -> &Image<f32> {
        &self.hr
    }

    pub fn lr(&self) -> &Image<f32> {
        &self.lr
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn source_id(&self) -> usize {
        self.source_id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub source_id: usize,
    pub slice_index: usize,
    pub scale: f64,
    pub hr_shape: (usize, usize),
    pub lr_shape: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SRDataset {
    pairs: Vec<SlicePair>,
    manifest: Vec<ManifestEntry>,
    /// `(source_id, slice_index)` of slices dropped as background.
    excluded: Vec<(usize, usize)>,
    /// Inputs skipped because they are not anisotropic.
    skipped_sources: Vec<usize>,
}

impl SRDataset {
    /// Assemble a dataset from already-built pairs. `manifest[i]` describes `pairs[i]`.
    pub fn from_parts(pairs: Vec<SlicePair>, manifest: Vec<ManifestEntry>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if pairs.len() != manifest.len() {
            return Err(Error::Shape(format!(
                "{} pairs but {} manifest entries",
                pairs.len(),
                manifest.len()
            )));
        }
        Ok(Self { pairs, manifest, excluded: Vec::new(), skipped_sources: Vec::new() })
    }

    /// Attach the bookkeeping of slices and inputs left out of the dataset.
    pub fn with_exclusions(mut self, excluded: Vec<(usize, usize)>, skipped_sources: Vec<usize>) -> Self {
        self.excluded = excluded;
        self.skipped_sources = skipped_sources;
        self
    }

    /// Dataset from bare pairs with a manifest derived from them; slice indices count up per
    /// source.
    pub fn from_pairs(pairs: Vec<SlicePair>) -> Result<Self> {
        let mut next = alloc::collections::BTreeMap::<usize, usize>::new();
        let manifest = pairs
            .iter()
            .map(|p| {
                let idx = next.entry(p.source_id).or_insert(0);
                let e = ManifestEntry {
                    source_id: p.source_id,
                    slice_index: *idx,
                    scale: p.scale,
                    hr_shape: p.hr.shape(),
                    lr_shape: p.lr.shape(),
                };
                *idx += 1;
                e
            })
            .collect();
        Self::from_parts(pairs, manifest)
    }

    pub fn pairs(&self) -> &[SlicePair] {
        &self.pairs
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }

    pub fn excluded(&self) -> &[(usize, usize)] {
        &self.excluded
    }

    pub fn skipped_sources(&self) -> &[usize] {
        &self.skipped_sources
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Distinct scales, ascending.
    pub fn scales(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.pairs.iter().map(|p| p.scale).collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        s.dedup();
        s
    }
}

/// Pairs for one normalized anisotropic volume, plus the indices of slices dropped as background.
fn pairs_for_volume(volume: &Volume, source_id: usize) -> Result<(Vec<(usize, SlicePair)>, Vec<usize>)> {
    if volume.norm().is_none() {
        return Err(Error::NotNormalized);
    }
    let role = detect_axis_role(volume)?;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (idx, hr) in volume.extract_slices(role.lr_axis)?.into_iter().enumerate() {
        let (lo, hi) = hr.range();
        if hi - lo < BACKGROUND_THRESHOLD {
            dropped.push(idx);
            continue;
        }
        kept.push((idx, SlicePair::synthesize(hr, role.scale, source_id)?));
    }
    if kept.is_empty() {
        return Err(Error::Shape(format!("volume {source_id} has only background slices")));
    }
    Ok((kept, dropped))
}

/// All training pairs from one normalized anisotropic volume, in slice order.
pub fn build_pairs_from_volume(volume: &Volume) -> Result<Vec<SlicePair>> {
    Ok(pairs_for_volume(volume, 0)?.0.into_iter().map(|(_, p)| p).collect())
}

/// Concatenate the pairs of every anisotropic input, ordered by input then slice index.
/// Isotropic inputs are skipped; it is an error if nothing is left.
pub fn build_dataset(volumes: &[Volume]) -> Result<SRDataset> {
    if volumes.is_empty() {
        return Err(Error::NoAnisotropicInputs);
    }
    let mut pairs = Vec::new();
    let mut manifest = Vec::new();
    let mut excluded = Vec::new();
    let mut skipped = Vec::new();
    for (source_id, v) in volumes.iter().enumerate() {
        if detect_axis_role(v).is_err() {
            skipped.push(source_id);
            continue;
        }
        let (kept, dropped) = pairs_for_volume(v, source_id)?;
        excluded.extend(dropped.into_iter().map(|i| (source_id, i)));
        for (slice_index, p) in kept {
            manifest.push(ManifestEntry {
                source_id,
                slice_index,
                scale: p.scale,
                hr_shape: p.hr.shape(),
                lr_shape: p.lr.shape(),
            });
            pairs.push(p);
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoAnisotropicInputs);
    }
    Ok(SRDataset { pairs, manifest, excluded, skipped_sources: skipped })
}
