//! L1 training over randomly sampled HR coordinates.
//!
//! One iteration takes a single slice pair, draws `queries_per_pair` coordinates uniformly (with
//! replacement) from its HR grid, predicts them from the LR slice and applies one Adam step on the
//! mean absolute error. One epoch visits every training pair once in shuffled order. After each
//! epoch the mean L1 over the held-out pairs (full HR grid) decides whether the model is the best
//! so far.
//!
//! Every random draw comes from a ChaCha stream derived from the seed: stream 0 initializes
//! weights, stream 1 splits off validation pairs and epoch `e` uses its own stream, so training
//! can resume at any epoch boundary with identical results.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::grid::cell_center;
use super::model::SRModel;
use crate::dataset::{SRDataset, SlicePair};
use crate::error::{Error, Result};

pub(crate) const STREAM_INIT: u64 = 0;
const STREAM_SPLIT: u64 = 1;
const STREAM_EPOCH_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub queries_per_pair: usize,
    pub seed: u64,
    /// Fraction of pairs held out for checkpoint selection (at least one pair).
    pub val_fraction: f64,
    /// Halve the learning rate every this many epochs; 0 keeps it constant.
    pub lr_halving_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, epochs: 800, queries_per_pair: 2048, seed: 0, val_fraction: 0.05, lr_halving_epochs: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(alloc::format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if self.epochs == 0 || self.queries_per_pair == 0 {
            return Err(Error::Config("epochs and queries_per_pair must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(alloc::format!("val_fraction {} not in [0, 1)", self.val_fraction)));
        }
        Ok(())
    }

    /// Learning rate used during the epoch after `completed` finished epochs.
    pub fn learning_rate_at(&self, completed: usize) -> f64 {
        match self.lr_halving_epochs {
            0 => self.learning_rate,
            n => self.learning_rate * libm::pow(0.5, (completed / n) as f64),
        }
    }
}

/// Per-epoch summary. `epoch` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub iterations: usize,
    pub is_best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestModel {
    pub epoch: usize,
    pub val_loss: f64,
    pub params: Vec<f32>,
}

/// Split pair indices into `(train, validation)`. With a single pair there is nothing to hold
/// out, so it serves as both.
pub fn split_indices(n: usize, cfg: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    if n < 2 {
        return ((0..n).collect(), (0..n).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(STREAM_SPLIT);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_val = (libm::round(cfg.val_fraction * n as f64) as usize).clamp(1, n - 1);
    let mut val = idx.split_off(n - n_val);
    idx.sort_unstable();
    val.sort_unstable();
    (idx, val)
}

/// Mean absolute error of the model over the full HR grid of each pair, averaged over pairs.
pub fn mean_l1(model: &SRModel<f32>, pairs: &[&SlicePair]) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for p in pairs {
        let pred = model.forward(p.lr(), p.hr().shape())?;
        let err: f64 = pred
            .data()
            .iter()
            .zip(p.hr().data())
            .map(|(a, b)| libm::fabs((*a - *b) as f64))
            .sum();
        total += err / pred.data().len() as f64;
    }
    Ok(total / pairs.len() as f64)
}

/// Mean absolute error and its (sub)gradient with respect to each prediction.
pub fn l1_loss(pred: &[f32], target: &[f32]) -> (f64, Vec<f32>) {
    debug_assert_eq!(pred.len(), target.len());
    let inv_n = 1.0 / pred.len() as f32;
    let mut loss = 0.0f64;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let e = p - t;
            loss += libm::fabs(e as f64);
            if e > 0.0 {
                inv_n
            } else if e < 0.0 {
                -inv_n
            } else {
                0.0
            }
        })
        .collect();
    (loss / pred.len() as f64, grad)
}

pub struct Trainer<'d> {
    cfg: TrainConfig,
    model: SRModel<f32>,
    adam: Adam<f32>,
    dataset: &'d SRDataset,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    epoch: usize,
    best: Option<BestModel>,
}

impl<'d> Trainer<'d> {
    pub fn new(model: SRModel<f32>, dataset: &'d SRDataset, cfg: TrainConfig) -> Result<Self> {
        let adam = Adam::new(model.params().len());
        Self::resume(model, adam, 0, None, dataset, cfg)
    }

    /// Continue after `epoch` completed epochs with the given optimizer state.
    pub fn resume(
        model: SRModel<f32>,
        adam: Adam<f32>,
        epoch: usize,
        best: Option<BestModel>,
        dataset: &'d SRDataset,
        cfg: TrainConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if adam.len() != model.params().len() {
            return Err(Error::ConfigMismatch(alloc::format!(
                "optimizer state has {} entries, model has {}",
                adam.len(),
                model.params().len()
            )));
        }
        let (train_idx, val_idx) = split_indices(dataset.len(), &cfg);
        Ok(Self { cfg, model, adam, dataset, train_idx, val_idx, epoch, best })
    }

    pub fn model(&self) -> &SRModel<f32> {
        &self.model
    }

    pub fn optimizer(&self) -> &Adam<f32> {
        &self.adam
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn best(&self) -> Option<&BestModel> {
        self.best.as_ref()
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn val_indices(&self) -> &[usize] {
        &self.val_idx
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.cfg.epochs
    }

    fn epoch_rng(&self, epoch: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(STREAM_EPOCH_BASE + epoch as u64);
        rng
    }

    /// One Adam step on a random coordinate batch of `pair`; returns the batch L1 loss.
    fn step(&mut self, pair: &SlicePair, rng: &mut ChaCha8Rng, grad: &mut [f32], iteration: usize) -> Result<f64> {
        let (h, w) = pair.hr().shape();
        let nq = self.cfg.queries_per_pair;
        let mut coords = Vec::with_capacity(nq);
        let mut targets = Vec::with_capacity(nq);
        for _ in 0..nq {
            let r = rng.random_range(0..h);
            let c = rng.random_range(0..w);
            coords.push([cell_center(r, h), cell_center(c, w)]);
            targets.push(pair.hr().get(r, c));
        }
        let (pred, tape) = self.model.forward_train(pair.lr(), &coords)?;
        let (loss, dpred) = l1_loss(&pred, &targets);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: self.epoch + 1, iteration });
        }
        grad.fill(0.0);
        self.model.backward(&tape, &dpred, grad);
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch: self.epoch + 1, iteration });
        }
        self.adam.update(self.model.params_mut(), grad, self.cfg.learning_rate_at(self.epoch));
        Ok(loss)
    }

    /// Run the next epoch and update the best model.
    pub fn run_epoch(&mut self) -> Result<EpochRecord> {
        let mut rng = self.epoch_rng(self.epoch);
        let mut order = self.train_idx.clone();
        order.shuffle(&mut rng);
        let mut grad = vec![0.0f32; self.model.params().len()];
        let dataset = self.dataset;
        let mut total = 0.0;
        for (it, &i) in order.iter().enumerate() {
            total += self.step(&dataset.pairs()[i], &mut rng, &mut grad, it)?;
        }
        if !self.model.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: self.epoch + 1, iteration: order.len() });
        }
        let val: Vec<&SlicePair> = self.val_idx.iter().map(|&i| &dataset.pairs()[i]).collect();
        let val_loss = mean_l1(&self.model, &val)?;
        self.epoch += 1;
        let is_best = self.best.as_ref().is_none_or(|b| val_loss < b.val_loss);
        if is_best {
            self.best = Some(BestModel { epoch: self.epoch, val_loss, params: self.model.params().to_vec() });
        }
        Ok(EpochRecord {
            epoch: self.epoch,
            train_loss: total / order.len() as f64,
            val_loss,
            iterations: order.len(),
            is_best,
        })
    }

    /// Best model seen so far, or the current one before any epoch finished.
    pub fn best_model(&self) -> SRModel<f32> {
        match &self.best {
            Some(b) => SRModel::from_params(*self.model.config(), b.params.clone())
                .expect("best parameters share the model layout"),
            None => self.model.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: SRModel<f32>,
    pub last: SRModel<f32>,
    pub log: Vec<EpochRecord>,
}

/// Train for `cfg.epochs` epochs; `on_epoch` sees every record as it is produced.
pub fn train(
    model: SRModel<f32>,
    dataset: &SRDataset,
    cfg: TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord, &Trainer<'_>),
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(model, dataset, cfg)?;
    let mut log = Vec::with_capacity(cfg.epochs);
    while !trainer.is_done() {
        let rec = trainer.run_epoch()?;
        on_epoch(&rec, &trainer);
        log.push(rec);
    }
    Ok(TrainOutcome { best: trainer.best_model(), last: trainer.model.clone(), log })
}
