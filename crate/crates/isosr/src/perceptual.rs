//! Learned perceptual distance in the LPIPS form, backed by weights loaded from disk.
//!
//! A backbone is a stack of stages; each stage runs 3x3 convolutions with ReLU, taps its output
//! and optionally max-pools 2x2 before the next stage. For each tap, features are unit-normalized
//! across channels, the squared difference is weighted per channel by non-negative `lin` weights,
//! averaged over space and summed over taps. Inputs in `[0, 1]` are mapped to `[-1, 1]` and then
//! shifted and scaled per channel.
//!
//! Weights live in a tensor file `lpips.bin` inside the directory named by `ISOSR_BACKBONE_DIR`:
//! meta `{"kind": "isosr-lpips", "name": ..., "stages": [{"convs": n, "pool": bool}, ...]}` and
//! tensors `shift`, `scale` (`[3]`), `stage{s}.conv{c}.weight` (`[cout, cin, 3, 3]`),
//! `stage{s}.conv{c}.bias` and `lin{s}` (`[channels]`).

use std::path::{Path, PathBuf};

use isosr_core::eval::{PerceptualBackbone, RgbImage};
use isosr_core::nn::conv::Conv3x3;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};
use crate::tensor_file::TensorFile;

pub const BACKBONE_ENV: &str = "ISOSR_BACKBONE_DIR";
pub const BACKBONE_FILE: &str = "lpips.bin";
const KIND: &str = "isosr-lpips";
const EPS: f32 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub convs: usize,
    pub pool: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    kind: String,
    name: String,
    stages: Vec<StageSpec>,
}

#[derive(Debug, Clone)]
struct ConvLayer {
    conv: Conv3x3,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

#[derive(Debug, Clone)]
struct Stage {
    convs: Vec<ConvLayer>,
    pool: bool,
    lin: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct ConvBackbone {
    name: String,
    shift: [f32; 3],
    scale: [f32; 3],
    stages: Vec<Stage>,
}

/// Channel-major feature planes.
struct Features {
    c: usize,
    h: usize,
    w: usize,
    v: Vec<f32>,
}

fn max_pool(f: &Features) -> Features {
    let (h, w) = (f.h / 2, f.w / 2);
    let mut v = vec![0f32; f.c * h * w];
    for c in 0..f.c {
        let src = &f.v[c * f.h * f.w..];
        for r in 0..h {
            for q in 0..w {
                let at = |dr: usize, dq: usize| src[(2 * r + dr) * f.w + 2 * q + dq];
                v[(c * h + r) * w + q] = at(0, 0).max(at(0, 1)).max(at(1, 0)).max(at(1, 1));
            }
        }
    }
    Features { c: f.c, h, w, v }
}

impl ConvBackbone {
    pub fn name(&self) -> &str {
        &self.name
    }

    fn taps(&self, img: &RgbImage) -> Vec<Features> {
        let (h, w) = img.shape();
        let mut v = vec![0f32; 3 * h * w];
        for (n, px) in img.data().iter().enumerate() {
            for c in 0..3 {
                v[c * h * w + n] = ((2.0 * px[c] - 1.0) - self.shift[c]) / self.scale[c];
            }
        }
        let mut x = Features { c: 3, h, w, v };
        let mut scratch = Vec::new();
        let mut taps = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            for layer in &stage.convs {
                let mut out = vec![0f32; layer.conv.cout * x.h * x.w];
                layer.conv.forward(&layer.weight, &layer.bias, &x.v, x.h, x.w, &mut out, &mut scratch);
                out.iter_mut().for_each(|o| *o = o.max(0.0));
                x = Features { c: layer.conv.cout, h: x.h, w: x.w, v: out };
            }
            let next = if stage.pool && x.h >= 2 && x.w >= 2 { Some(max_pool(&x)) } else { None };
            taps.push(Features { c: x.c, h: x.h, w: x.w, v: x.v.clone() });
            if let Some(n) = next {
                x = n;
            }
        }
        taps
    }

    /// Build from a loaded tensor file.
    pub fn from_tensor_file(file: &TensorFile, origin: &Path) -> Result<Self> {
        let meta: Meta = serde_json::from_value(file.meta.clone())
            .map_err(|e| IoError::format(origin, format!("backbone header: {e}")))?;
        if meta.kind != KIND {
            return Err(IoError::format(origin, format!("not a perceptual backbone (kind {:?})", meta.kind)));
        }
        let tensor = |name: &str| {
            file.get(name)
                .ok_or_else(|| IoError::format(origin, format!("missing tensor {name}")))
        };
        let triple = |name: &str| -> Result<[f32; 3]> {
            let (_, v) = tensor(name)?;
            <[f32; 3]>::try_from(v).map_err(|_| IoError::format(origin, format!("{name} must have 3 values")))
        };
        let (shift, scale) = (triple("shift")?, triple("scale")?);
        if scale.contains(&0.0) {
            return Err(IoError::format(origin, "zero input scale"));
        }
        let mut cin = 3;
        let mut stages = Vec::with_capacity(meta.stages.len());
        for (s, spec) in meta.stages.iter().enumerate() {
            if spec.convs == 0 {
                return Err(IoError::format(origin, format!("stage {s} has no convolutions")));
            }
            let mut convs = Vec::with_capacity(spec.convs);
            for c in 0..spec.convs {
                let (shape, weight) = tensor(&format!("stage{s}.conv{c}.weight"))?;
                if shape.len() != 4 || shape[1] != cin || shape[2] != 3 || shape[3] != 3 {
                    return Err(IoError::format(origin, format!("stage{s}.conv{c}.weight has shape {shape:?}, input has {cin} channels")));
                }
                let conv = Conv3x3 { cin, cout: shape[0] };
                let (_, bias) = tensor(&format!("stage{s}.conv{c}.bias"))?;
                if bias.len() != conv.cout {
                    return Err(IoError::format(origin, format!("stage{s}.conv{c}.bias has {} values", bias.len())));
                }
                convs.push(ConvLayer { conv, weight: weight.to_vec(), bias: bias.to_vec() });
                cin = conv.cout;
            }
            let (_, lin) = tensor(&format!("lin{s}"))?;
            if lin.len() != cin || lin.iter().any(|l| *l < 0.0 || !l.is_finite()) {
                return Err(IoError::format(origin, format!("lin{s} must hold {cin} non-negative weights")));
            }
            stages.push(Stage { convs, pool: spec.pool, lin: lin.to_vec() });
        }
        if stages.is_empty() {
            return Err(IoError::format(origin, "backbone has no stages"));
        }
        Ok(Self { name: meta.name, shift, scale, stages })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::load(path)?, path)
    }

    /// Small randomly initialized backbone (two stages, 8 and 12 channels). Its distances carry no
    /// perceptual meaning; it exercises the protocol when no trained weights are available.
    pub fn untrained(seed: u32) -> Self {
        let mut s = seed.wrapping_mul(747_796_405).wrapping_add(2_891_336_453);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 17;
            s ^= s << 5;
            (s % 2001) as f32 / 1000.0 - 1.0
        };
        let mut conv = |cin: usize, cout: usize| ConvLayer {
            conv: Conv3x3 { cin, cout },
            weight: (0..cout * cin * 9).map(|_| next() / (cin as f32 * 3.0)).collect(),
            bias: (0..cout).map(|_| next() * 0.1).collect(),
        };
        let stages = vec![
            Stage { convs: vec![conv(3, 8)], pool: true, lin: vec![0.5; 8] },
            Stage { convs: vec![conv(8, 8), conv(8, 12)], pool: false, lin: vec![0.25; 12] },
        ];
        Self { name: format!("untrained-{seed}"), shift: [0.0; 3], scale: [1.0; 3], stages }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = Meta {
            kind: KIND.into(),
            name: self.name.clone(),
            stages: self.stages.iter().map(|s| StageSpec { convs: s.convs.len(), pool: s.pool }).collect(),
        };
        let mut file = TensorFile::new(serde_json::to_value(meta).expect("meta serializes"));
        file.push("shift", &[3], &self.shift);
        file.push("scale", &[3], &self.scale);
        for (s, stage) in self.stages.iter().enumerate() {
            for (c, layer) in stage.convs.iter().enumerate() {
                file.push(format!("stage{s}.conv{c}.weight"), &[layer.conv.cout, layer.conv.cin, 3, 3], &layer.weight);
                file.push(format!("stage{s}.conv{c}.bias"), &[layer.conv.cout], &layer.bias);
            }
            file.push(format!("lin{s}"), &[stage.lin.len()], &stage.lin);
        }
        file.save(path)
    }
}

fn unit_normalize(f: &Features) -> Vec<f32> {
    let hw = f.h * f.w;
    let mut out = f.v.clone();
    for p in 0..hw {
        let norm = (0..f.c).map(|c| f.v[c * hw + p].powi(2)).sum::<f32>().sqrt();
        for c in 0..f.c {
            out[c * hw + p] /= norm + EPS;
        }
    }
    out
}

impl PerceptualBackbone for ConvBackbone {
    fn name(&self) -> &str {
        &self.name
    }

    fn distance(&self, a: &RgbImage, b: &RgbImage) -> isosr_core::Result<f64> {
        if a.shape() != b.shape() {
            return Err(isosr_core::Error::Shape(format!("perceptual inputs {:?} vs {:?}", a.shape(), b.shape())));
        }
        let mut total = 0.0f64;
        for ((fa, fb), stage) in self.taps(a).iter().zip(self.taps(b).iter()).zip(&self.stages) {
            let (na, nb) = (unit_normalize(fa), unit_normalize(fb));
            let hw = fa.h * fa.w;
            let mut sum = 0.0f64;
            for c in 0..fa.c {
                let lin = stage.lin[c] as f64;
                for p in 0..hw {
                    let d = (na[c * hw + p] - nb[c * hw + p]) as f64;
                    sum += lin * d * d;
                }
            }
            total += sum / hw as f64;
        }
        Ok(total)
    }
}

/// Backbone file named by `ISOSR_BACKBONE_DIR`, if the variable is set.
pub fn backbone_path_from_env() -> Option<PathBuf> {
    std::env::var_os(BACKBONE_ENV).map(|d| PathBuf::from(d).join(BACKBONE_FILE))
}

/// Load the backbone from `ISOSR_BACKBONE_DIR`. `Ok(None)` when the variable is unset or the
/// directory holds no backbone file; the perceptual metric is then reported as absent.
pub fn load_backbone_from_env() -> Result<Option<ConvBackbone>> {
    match backbone_path_from_env() {
        Some(p) if p.is_file() => ConvBackbone::load(&p).map(Some),
        _ => Ok(None),
    }
}
