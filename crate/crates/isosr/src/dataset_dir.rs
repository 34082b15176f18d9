//! Slice-pair datasets on disk.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/pairs/000000.arr   HR array record followed by the LR array record
//! ```
//!
//! The manifest lists provenance and shapes of every pair together with the SHA-256 of its file;
//! the SHA-256 of the manifest itself identifies the whole dataset.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use isosr_core::dataset::BACKGROUND_THRESHOLD;
use isosr_core::{ManifestEntry, SRDataset, SlicePair};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array_file::{read_image, write_image};
use crate::error::{IoError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT: &str = "isosr-dataset";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub id: usize,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub file: String,
    pub source_id: usize,
    pub slice_index: usize,
    pub scale: f64,
    pub hr_shape: [usize; 2],
    pub lr_shape: [usize; 2],
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub background_threshold: f64,
    pub sources: Vec<SourceInfo>,
    pub pairs: Vec<PairRecord>,
    /// `[source_id, slice_index]` of background slices left out.
    pub excluded: Vec<[usize; 2]>,
    pub skipped_sources: Vec<usize>,
}

impl Manifest {
    /// Number of pairs per distinct scale, in increasing scale order.
    pub fn scale_histogram(&self) -> Vec<(f64, usize)> {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for p in &self.pairs {
            *counts.entry(p.scale.to_bits()).or_default() += 1;
        }
        let mut out: Vec<(f64, usize)> = counts.into_iter().map(|(b, n)| (f64::from_bits(b), n)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn pair_bytes(pair: &SlicePair) -> Vec<u8> {
    let mut buf = Vec::new();
    write_image(&mut buf, pair.hr()).expect("writing to memory");
    write_image(&mut buf, pair.lr()).expect("writing to memory");
    buf
}

/// Write `dataset` under `dir` (created if missing). `sources[i]` names input `i`.
pub fn save_dataset(dataset: &SRDataset, dir: &Path, sources: &[String]) -> Result<Manifest> {
    let pair_dir = dir.join("pairs");
    std::fs::create_dir_all(&pair_dir).map_err(|e| IoError::io(&pair_dir, e))?;
    let mut records = Vec::with_capacity(dataset.len());
    for (n, (pair, entry)) in dataset.pairs().iter().zip(dataset.manifest()).enumerate() {
        let file = format!("pairs/{n:06}.arr");
        let bytes = pair_bytes(pair);
        let path = dir.join(&file);
        std::fs::write(&path, &bytes).map_err(|e| IoError::io(&path, e))?;
        records.push(PairRecord {
            file,
            source_id: entry.source_id,
            slice_index: entry.slice_index,
            scale: entry.scale,
            hr_shape: [entry.hr_shape.0, entry.hr_shape.1],
            lr_shape: [entry.lr_shape.0, entry.lr_shape.1],
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        background_threshold: BACKGROUND_THRESHOLD as f64,
        sources: sources.iter().enumerate().map(|(id, p)| SourceInfo { id, path: p.clone() }).collect(),
        pairs: records,
        excluded: dataset.excluded().iter().map(|&(s, i)| [s, i]).collect(),
        skipped_sources: dataset.skipped_sources().to_vec(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut w = BufWriter::new(File::create(&path).map_err(|e| IoError::io(&path, e))?);
    serde_json::to_writer_pretty(&mut w, &manifest)
        .map_err(std::io::Error::from)
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| IoError::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let file = File::open(&path).map_err(|e| IoError::io(&path, e))?;
    let m: Manifest = serde_json::from_reader(BufReader::new(file)).map_err(|e| IoError::format(&path, e.to_string()))?;
    if m.format != FORMAT || m.version != VERSION {
        return Err(IoError::format(&path, format!("unsupported dataset format {} v{}", m.format, m.version)));
    }
    Ok(m)
}

/// SHA-256 of the manifest file, which pins every pair file through its recorded hash.
pub fn dataset_checksum(dir: &Path) -> Result<String> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = std::fs::read(&path).map_err(|e| IoError::io(&path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Load a dataset, verifying each pair file against its recorded hash and shapes.
pub fn load_dataset(dir: &Path) -> Result<(SRDataset, Manifest)> {
    let manifest = read_manifest(dir)?;
    let mut pairs = Vec::with_capacity(manifest.pairs.len());
    let mut entries = Vec::with_capacity(manifest.pairs.len());
    for rec in &manifest.pairs {
        let path = dir.join(&rec.file);
        let bytes = std::fs::read(&path).map_err(|e| IoError::io(&path, e))?;
        if sha256_hex(&bytes) != rec.sha256 {
            return Err(IoError::format(&path, "checksum does not match the manifest"));
        }
        let mut r = bytes.as_slice();
        let hr = read_image(&mut r).map_err(|e| IoError::io(&path, e))?;
        let lr = read_image(&mut r).map_err(|e| IoError::io(&path, e))?;
        if [hr.rows(), hr.cols()] != rec.hr_shape || [lr.rows(), lr.cols()] != rec.lr_shape {
            return Err(IoError::format(&path, "array shapes do not match the manifest"));
        }
        pairs.push(SlicePair::new(hr, lr, rec.scale, rec.source_id)?);
        entries.push(ManifestEntry {
            source_id: rec.source_id,
            slice_index: rec.slice_index,
            scale: rec.scale,
            hr_shape: (rec.hr_shape[0], rec.hr_shape[1]),
            lr_shape: (rec.lr_shape[0], rec.lr_shape[1]),
        });
    }
    let dataset = SRDataset::from_parts(pairs, entries)?.with_exclusions(
        manifest.excluded.iter().map(|&[s, i]| (s, i)).collect(),
        manifest.skipped_sources.clone(),
    );
    Ok((dataset, manifest))
}
