//! Pipeline configuration (TOML).
//!
//! ```toml
//! seed = 0
//! out_dir = "runs/toy"
//!
//! [data]
//! inputs = ["sub1.nii.gz"]            # anisotropic volumes; optional when [simulate] is used
//!
//! [[simulate.cases]]
//! subject = "sub1"
//! ground_truth = "gt/sub1.nii.gz"
//! scale = 2.0
//! axis = 0
//!
//! [model]
//! feature_dim = 128
//! channels = 64
//! res_blocks = 16
//! mlp_hidden_layers = 5
//! mlp_width = 256
//! activation = "relu"
//!
//! [train]
//! learning_rate = 1e-4
//! epochs = 800
//! queries_per_pair = 2048
//! val_fraction = 0.05
//! lr_halving_epochs = 0               # halve the learning rate every N epochs; 0 = constant
//!
//! [evaluate]
//! lpips = true
//! montage = true
//! ```
//!
//! Every section and field is optional and defaults to the values above (no inputs, no
//! simulation cases, `out_dir = "isosr-out"`). Relative paths are resolved against the config
//! file's directory.

use std::path::{Path, PathBuf};

use isosr_core::nn::{Activation, ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub feature_dim: usize,
    pub channels: usize,
    pub res_blocks: usize,
    pub mlp_hidden_layers: usize,
    pub mlp_width: usize,
    pub activation: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConfig::default();
        Self {
            feature_dim: c.feature_dim,
            channels: c.channels,
            res_blocks: c.res_blocks,
            mlp_hidden_layers: c.mlp_hidden_layers,
            mlp_width: c.mlp_width,
            activation: c.activation.name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub queries_per_pair: usize,
    pub val_fraction: f64,
    pub lr_halving_epochs: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            queries_per_pair: t.queries_per_pair,
            val_fraction: t.val_fraction,
            lr_halving_epochs: t.lr_halving_epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationCase {
    pub subject: String,
    pub ground_truth: PathBuf,
    pub scale: f64,
    pub axis: usize,
}

impl SimulationCase {
    /// File stem of the simulated anisotropic volume, e.g. `sub1_x2.5_coronal`.
    pub fn stem(&self) -> String {
        format!("{}_x{}_{}", self.subject, self.scale, isosr_core::eval::view_name(self.axis))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub cases: Vec<SimulationCase>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub lpips: bool,
    pub montage: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { lpips: true, montage: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataSection,
    pub simulate: SimulateSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("isosr-out"),
            data: DataSection::default(),
            simulate: SimulateSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))
    }

    /// Parse, resolve relative paths against the file's directory and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| IoError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        self.data.inputs.iter_mut().for_each(fix);
        self.simulate.cases.iter_mut().for_each(|c| fix(&mut c.ground_truth));
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let m = &self.model;
        let activation = Activation::from_name(&m.activation)
            .ok_or_else(|| IoError::Config(format!("unknown activation {:?} (relu, leaky_relu)", m.activation)))?;
        let c = ModelConfig {
            feature_dim: m.feature_dim,
            channels: m.channels,
            res_blocks: m.res_blocks,
            mlp_hidden_layers: m.mlp_hidden_layers,
            mlp_width: m.mlp_width,
            activation,
        };
        c.validate().map_err(|e| IoError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = TrainConfig {
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            queries_per_pair: self.train.queries_per_pair,
            seed: self.seed,
            val_fraction: self.train.val_fraction,
            lr_halving_epochs: self.train.lr_halving_epochs,
        };
        t.validate().map_err(|e| IoError::Config(e.to_string()))?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config()?;
        self.train_config()?;
        for p in &self.data.inputs {
            if !p.is_file() {
                return Err(IoError::Config(format!("input volume {} does not exist", p.display())));
            }
        }
        let mut stems = std::collections::BTreeSet::new();
        for c in &self.simulate.cases {
            if !(c.scale.is_finite() && c.scale > 1.0) {
                return Err(IoError::Config(format!("simulation scale {} must be > 1", c.scale)));
            }
            if c.axis > 2 {
                return Err(IoError::Config(format!("simulation axis {} not in 0..=2", c.axis)));
            }
            if !c.ground_truth.is_file() {
                return Err(IoError::Config(format!("ground truth {} does not exist", c.ground_truth.display())));
            }
            if !stems.insert(c.stem()) {
                return Err(IoError::Config(format!("duplicate simulation case {}", c.stem())));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
