//! Model checkpoints: architecture, named parameter tensors, training progress and (for resuming)
//! the optimizer state and best parameters so far. Files are written to a temporary name and
//! renamed into place, so an interrupted save never leaves a torn checkpoint.

use std::path::Path;

use isosr_core::nn::{Activation, Adam, BestModel, ModelConfig, SRModel, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};
use crate::tensor_file::TensorFile;

const KIND: &str = "isosr-checkpoint";
const OPT_M: &str = "optimizer.m";
const OPT_V: &str = "optimizer.v";
const BEST_PREFIX: &str = "best/";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSection {
    pub feature_dim: usize,
    pub channels: usize,
    pub res_blocks: usize,
    pub mlp_hidden_layers: usize,
    pub mlp_width: usize,
    pub activation: String,
}

impl ModelSection {
    pub fn from_config(c: &ModelConfig) -> Self {
        Self {
            feature_dim: c.feature_dim,
            channels: c.channels,
            res_blocks: c.res_blocks,
            mlp_hidden_layers: c.mlp_hidden_layers,
            mlp_width: c.mlp_width,
            activation: c.activation.name().into(),
        }
    }

    pub fn to_config(&self) -> std::result::Result<ModelConfig, String> {
        let activation =
            Activation::from_name(&self.activation).ok_or_else(|| format!("unknown activation {:?}", self.activation))?;
        Ok(ModelConfig {
            feature_dim: self.feature_dim,
            channels: self.channels,
            res_blocks: self.res_blocks,
            mlp_hidden_layers: self.mlp_hidden_layers,
            mlp_width: self.mlp_width,
            activation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub queries_per_pair: usize,
    pub val_fraction: f64,
    #[serde(default)]
    pub lr_halving_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    kind: String,
    model: ModelSection,
    train: Option<TrainSection>,
    seed: u64,
    epoch: usize,
    val_loss: Option<f64>,
    best_epoch: Option<usize>,
    best_val_loss: Option<f64>,
    optimizer_step: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: SRModel<f32>,
    pub seed: u64,
    /// Completed epochs when the parameters were taken.
    pub epoch: usize,
    pub val_loss: Option<f64>,
    pub train: Option<TrainConfig>,
    /// Best model so far (kept in checkpoints meant for resuming).
    pub best: Option<BestModel>,
    pub optimizer: Option<Adam<f32>>,
}

impl Checkpoint {
    pub fn new(model: SRModel<f32>, seed: u64, epoch: usize, val_loss: Option<f64>) -> Self {
        Self { model, seed, epoch, val_loss, train: None, best: None, optimizer: None }
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let meta = Meta {
        kind: KIND.into(),
        model: ModelSection::from_config(ckpt.model.config()),
        train: ckpt.train.map(|t| TrainSection {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            queries_per_pair: t.queries_per_pair,
            val_fraction: t.val_fraction,
            lr_halving_epochs: t.lr_halving_epochs,
        }),
        seed: ckpt.seed,
        epoch: ckpt.epoch,
        val_loss: ckpt.val_loss.filter(|v| v.is_finite()),
        best_epoch: ckpt.best.as_ref().map(|b| b.epoch),
        best_val_loss: ckpt.best.as_ref().map(|b| b.val_loss).filter(|v| v.is_finite()),
        optimizer_step: ckpt.optimizer.as_ref().map(|a| a.step_count()),
    };
    let mut file = TensorFile::new(serde_json::to_value(&meta).map_err(|e| IoError::format(path, e.to_string()))?);
    let params = ckpt.model.params();
    for spec in ckpt.model.param_specs() {
        file.push(spec.name.clone(), &spec.shape, &params[spec.range()]);
    }
    if let Some(adam) = &ckpt.optimizer {
        let (m, v) = adam.moments();
        file.push(OPT_M, &[m.len()], m);
        file.push(OPT_V, &[v.len()], v);
    }
    if let Some(best) = &ckpt.best {
        if best.params.len() != params.len() {
            return Err(IoError::Mismatch(format!("best parameters have {} entries, model has {}", best.params.len(), params.len())));
        }
        for spec in ckpt.model.param_specs() {
            file.push(format!("{BEST_PREFIX}{}", spec.name), &spec.shape, &best.params[spec.range()]);
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    file.save(&tmp)?;
    std::fs::rename(&tmp, path).map_err(|e| IoError::io(path, e))
}

fn read_params(file: &TensorFile, path: &Path, model: &SRModel<f32>, prefix: &str) -> Result<Vec<f32>> {
    let mut params = vec![0f32; model.params().len()];
    for spec in model.param_specs() {
        let name = format!("{prefix}{}", spec.name);
        let (shape, values) = file
            .get(&name)
            .ok_or_else(|| IoError::Mismatch(format!("{}: missing tensor {name}", path.display())))?;
        if shape != spec.shape.as_slice() {
            return Err(IoError::Mismatch(format!(
                "{}: tensor {name} has shape {shape:?}, config implies {:?}",
                path.display(),
                spec.shape
            )));
        }
        params[spec.range()].copy_from_slice(values);
    }
    Ok(params)
}

/// Load a checkpoint. With `expected`, any architecture difference is a mismatch error.
pub fn load_checkpoint(path: &Path, expected: Option<&ModelConfig>) -> Result<Checkpoint> {
    let file = TensorFile::load(path)?;
    let meta: Meta =
        serde_json::from_value(file.meta.clone()).map_err(|e| IoError::format(path, format!("checkpoint header: {e}")))?;
    if meta.kind != KIND {
        return Err(IoError::format(path, format!("not a checkpoint (kind {:?})", meta.kind)));
    }
    let config = meta.model.to_config().map_err(|e| IoError::format(path, e))?;
    if let Some(want) = expected {
        if *want != config {
            return Err(IoError::Mismatch(format!(
                "{} was trained with {:?}, expected {:?}",
                path.display(),
                meta.model,
                ModelSection::from_config(want)
            )));
        }
    }
    let mut model = SRModel::<f32>::new(config, 0)?;
    let params = read_params(&file, path, &model, "")?;
    model.params_mut().copy_from_slice(&params);
    let optimizer = match (meta.optimizer_step, file.get(OPT_M), file.get(OPT_V)) {
        (Some(step), Some((_, m)), Some((_, v))) if m.len() == model.params().len() => {
            Adam::from_state(step, m.to_vec(), v.to_vec())
        }
        (None, None, None) => None,
        _ => return Err(IoError::format(path, "incomplete optimizer state")),
    };
    let best = match (meta.best_epoch, meta.best_val_loss) {
        (Some(epoch), Some(val_loss)) => {
            Some(BestModel { epoch, val_loss, params: read_params(&file, path, &model, BEST_PREFIX)? })
        }
        _ => None,
    };
    Ok(Checkpoint {
        model,
        seed: meta.seed,
        epoch: meta.epoch,
        val_loss: meta.val_loss,
        train: meta.train.map(|t| TrainConfig {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            queries_per_pair: t.queries_per_pair,
            seed: meta.seed,
            val_fraction: t.val_fraction,
            lr_halving_epochs: t.lr_halving_epochs,
        }),
        best,
        optimizer,
    })
}
