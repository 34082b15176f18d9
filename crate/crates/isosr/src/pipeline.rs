//! The pipeline stages behind the subcommands. All outputs live under the configured output
//! directory:
//!
//! ```text
//! config.toml                      resolved configuration of the latest invocation
//! simulated/<subject>_gt.nii.gz    normalized ground truth
//! simulated/<case>.nii.gz          simulated anisotropic input
//! dataset/                         slice-pair dataset
//! checkpoints/best.ckpt            best model by validation loss
//! checkpoints/last.ckpt            latest state, used to resume
//! train_log.jsonl
//! reconstructed/<input>_iso.nii.gz
//! baseline/<input>_cubic.nii.gz
//! report.tsv, lpips_slices.tsv, depth_adjustments.tsv, montage/<case>.png
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use isosr_core::eval::{
    cubic_upsample, evaluate_sr, reconcile_shapes, simulate_anisotropic, MetricsRecord, PerceptualBackbone,
};
use isosr_core::nn::{EpochRecord, SRModel, Trainer};
use isosr_core::reconstruct::{plan_reconstruction, reconstruct_isotropic};
use isosr_core::volume::other_axes;
use isosr_core::{build_dataset, Volume};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::config::PipelineConfig;
use crate::dataset_dir::{dataset_checksum, load_dataset, save_dataset, Manifest};
use crate::error::{IoError, Result};
use crate::perceptual::load_backbone_from_env;
use crate::report::{self, DepthLog, LpipsLog};
use crate::train_log::{append_record, read_log, truncate_log, LogRecord};
use crate::volume_io::{ensure_normalized, load_volume, save_volume, volume_stem};

#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn simulated_dir(&self) -> PathBuf {
        self.root.join("simulated")
    }

    pub fn simulated(&self, stem: &str) -> PathBuf {
        self.simulated_dir().join(format!("{stem}.nii.gz"))
    }

    pub fn ground_truth(&self, subject: &str) -> PathBuf {
        self.simulated_dir().join(format!("{subject}_gt.nii.gz"))
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.root.join("dataset")
    }

    pub fn checkpoints_dir(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn best_checkpoint(&self) -> PathBuf {
        self.checkpoints_dir().join("best.ckpt")
    }

    pub fn last_checkpoint(&self) -> PathBuf {
        self.checkpoints_dir().join("last.ckpt")
    }

    pub fn train_log(&self) -> PathBuf {
        self.root.join("train_log.jsonl")
    }

    pub fn reconstructed(&self, stem: &str) -> PathBuf {
        self.root.join("reconstructed").join(format!("{stem}_iso.nii.gz"))
    }

    pub fn baseline(&self, stem: &str) -> PathBuf {
        self.root.join("baseline").join(format!("{stem}_cubic.nii.gz"))
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.tsv")
    }

    pub fn lpips_log(&self) -> PathBuf {
        self.root.join("lpips_slices.tsv")
    }

    pub fn depth_log(&self) -> PathBuf {
        self.root.join("depth_adjustments.tsv")
    }

    pub fn montage(&self, stem: &str) -> PathBuf {
        self.root.join("montage").join(format!("{stem}.png"))
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e)),
        None => Ok(()),
    }
}

fn save(volume: &Volume, path: &Path) -> Result<()> {
    create_parent(path)?;
    save_volume(volume, path)
}

/// Record the configuration an invocation ran with.
pub fn write_config(cfg: &PipelineConfig) -> Result<PathBuf> {
    let path = Layout::new(&cfg.out_dir).config();
    create_parent(&path)?;
    std::fs::write(&path, cfg.to_toml()).map_err(|e| IoError::io(&path, e))?;
    Ok(path)
}

/// Anisotropic volumes the pipeline works on: explicit inputs followed by simulated cases, as
/// `(stem, path)`.
pub fn inputs(cfg: &PipelineConfig) -> Result<Vec<(String, PathBuf)>> {
    let layout = Layout::new(&cfg.out_dir);
    let mut out: Vec<(String, PathBuf)> = cfg.data.inputs.iter().map(|p| (volume_stem(p), p.clone())).collect();
    out.extend(cfg.simulate.cases.iter().map(|c| (c.stem(), layout.simulated(&c.stem()))));
    let mut seen = std::collections::BTreeSet::new();
    for (stem, path) in &out {
        if !seen.insert(stem.clone()) {
            return Err(IoError::Config(format!("two inputs share the name {stem}")));
        }
        if !path.is_file() {
            let hint = if path.starts_with(layout.simulated_dir()) { " (run `simulate` first)" } else { "" };
            return Err(IoError::Config(format!("input {} does not exist{hint}", path.display())));
        }
    }
    if out.is_empty() {
        return Err(IoError::Config("no inputs: set data.inputs or add [[simulate.cases]]".into()));
    }
    Ok(out)
}

fn load_input(path: &Path) -> Result<Volume> {
    ensure_normalized(load_volume(path)?)
}

/// Normalize each ground truth and degrade it along the case's axis. Returns the written inputs.
pub fn simulate(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    if cfg.simulate.cases.is_empty() {
        return Err(IoError::Config("no [[simulate.cases]] configured".into()));
    }
    let layout = Layout::new(&cfg.out_dir);
    let mut subjects: BTreeMap<&str, &Path> = BTreeMap::new();
    for c in &cfg.simulate.cases {
        if let Some(prev) = subjects.insert(&c.subject, &c.ground_truth) {
            if prev != c.ground_truth {
                return Err(IoError::Config(format!("subject {} has two ground truths", c.subject)));
            }
        }
    }
    let mut gts = BTreeMap::new();
    for (subject, path) in subjects {
        let gt = load_volume(path)?.normalize()?;
        save(&gt, &layout.ground_truth(subject))?;
        gts.insert(subject, gt);
    }
    let mut written = Vec::new();
    for c in &cfg.simulate.cases {
        let lr = simulate_anisotropic(&gts[c.subject.as_str()], c.scale, c.axis)?;
        let path = layout.simulated(&c.stem());
        save(&lr, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub manifest: Manifest,
    pub checksum: String,
    pub dir: PathBuf,
}

/// Build the slice-pair dataset from every input, replacing any previous one.
pub fn build(cfg: &PipelineConfig) -> Result<DatasetSummary> {
    let inputs = inputs(cfg)?;
    let volumes = inputs.iter().map(|(_, p)| load_input(p)).collect::<Result<Vec<_>>>()?;
    let dataset = build_dataset(&volumes)?;
    let dir = Layout::new(&cfg.out_dir).dataset_dir();
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| IoError::io(&dir, e))?;
    }
    let names: Vec<String> = inputs.iter().map(|(s, _)| s.clone()).collect();
    let manifest = save_dataset(&dataset, &dir, &names)?;
    Ok(DatasetSummary { manifest, checksum: dataset_checksum(&dir)?, dir })
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub best_checkpoint: PathBuf,
}

fn resume_trainer<'d>(
    cfg: &PipelineConfig,
    path: &Path,
    dataset: &'d isosr_core::SRDataset,
) -> Result<Trainer<'d>> {
    let model_cfg = cfg.model_config()?;
    let train_cfg = cfg.train_config()?;
    let ck = load_checkpoint(path, Some(&model_cfg))?;
    let adam = ck.optimizer.ok_or_else(|| {
        IoError::Mismatch(format!("{} has no optimizer state; resume from last.ckpt", path.display()))
    })?;
    let same_run = ck.train.is_some_and(|t| {
        t.seed == train_cfg.seed
            && t.learning_rate == train_cfg.learning_rate
            && t.queries_per_pair == train_cfg.queries_per_pair
            && t.val_fraction == train_cfg.val_fraction
            && t.lr_halving_epochs == train_cfg.lr_halving_epochs
    });
    if !same_run || ck.seed != cfg.seed {
        return Err(IoError::Mismatch(format!(
            "{} was written with different training settings or seed; only `epochs` may change on resume",
            path.display()
        )));
    }
    Ok(Trainer::resume(ck.model, adam, ck.epoch, ck.best, dataset, train_cfg)?)
}

/// Train on the dataset in the output directory. With `resume`, continue from that checkpoint
/// (which must carry optimizer state) and drop log records past its epoch.
pub fn train(cfg: &PipelineConfig, resume: Option<&Path>, mut on_epoch: impl FnMut(&LogRecord)) -> Result<TrainSummary> {
    let layout = Layout::new(&cfg.out_dir);
    let dir = layout.dataset_dir();
    if !dir.join(crate::dataset_dir::MANIFEST_FILE).is_file() {
        return Err(IoError::Config(format!("no dataset in {} (run `build-dataset` first)", dir.display())));
    }
    let (dataset, _) = load_dataset(&dir)?;
    let train_cfg = cfg.train_config()?;
    let log = layout.train_log();
    let mut trainer = match resume {
        Some(path) => resume_trainer(cfg, path, &dataset)?,
        None => Trainer::new(SRModel::new(cfg.model_config()?, cfg.seed)?, &dataset, train_cfg)?,
    };
    let previous = if resume.is_some() {
        truncate_log(&log, trainer.epoch())?
    } else {
        if log.exists() {
            std::fs::remove_file(&log).map_err(|e| IoError::io(&log, e))?;
        }
        Vec::new()
    };
    let offset = previous.last().map_or(0.0, |r| r.wall_time_s);
    std::fs::create_dir_all(layout.checkpoints_dir()).map_err(|e| IoError::io(layout.checkpoints_dir(), e))?;
    let start = Instant::now();
    while !trainer.is_done() {
        let rec: EpochRecord = trainer.run_epoch()?;
        if rec.is_best {
            let mut best = Checkpoint::new(trainer.best_model(), cfg.seed, rec.epoch, Some(rec.val_loss));
            best.train = Some(train_cfg);
            save_checkpoint(&best, &layout.best_checkpoint())?;
        }
        let mut last = Checkpoint::new(trainer.model().clone(), cfg.seed, rec.epoch, Some(rec.val_loss));
        last.train = Some(train_cfg);
        last.optimizer = Some(trainer.optimizer().clone());
        last.best = trainer.best().cloned();
        save_checkpoint(&last, &layout.last_checkpoint())?;
        let entry = LogRecord::new(&rec, offset + start.elapsed().as_secs_f64());
        append_record(&log, &entry)?;
        on_epoch(&entry);
    }
    let best = trainer.best().ok_or_else(|| IoError::Config("no epochs were run".into()))?;
    if !layout.best_checkpoint().is_file() {
        let mut ck = Checkpoint::new(trainer.best_model(), cfg.seed, best.epoch, Some(best.val_loss));
        ck.train = Some(train_cfg);
        save_checkpoint(&ck, &layout.best_checkpoint())?;
    }
    Ok(TrainSummary {
        epochs: trainer.epoch(),
        best_epoch: best.epoch,
        best_val_loss: best.val_loss,
        best_checkpoint: layout.best_checkpoint(),
    })
}

/// Loss curve of the latest training run.
pub fn training_log(cfg: &PipelineConfig) -> Result<Vec<LogRecord>> {
    read_log(&Layout::new(&cfg.out_dir).train_log())
}

/// Reconstruct every input to isotropic resolution with the given (default: best) checkpoint.
pub fn reconstruct(cfg: &PipelineConfig, checkpoint: Option<&Path>) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(&cfg.out_dir);
    let path = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| layout.best_checkpoint());
    if !path.is_file() {
        return Err(IoError::Config(format!("checkpoint {} does not exist (run `train` first)", path.display())));
    }
    let ck = load_checkpoint(&path, Some(&cfg.model_config()?))?;
    let mut written = Vec::new();
    for (stem, input) in inputs(cfg)? {
        let sr = reconstruct_isotropic(&load_input(&input)?, &ck.model)?;
        let out = layout.reconstructed(&stem);
        save(&sr, &out)?;
        written.push(out);
    }
    Ok(written)
}

/// Cubic-spline resampling of one volume to the reconstruction grid, clipped to `[0, 1]`.
pub fn cubic_baseline(volume: &Volume) -> Result<Volume> {
    let plan = plan_reconstruction(volume)?;
    let mut out = cubic_upsample(volume, plan.lr_axis, plan.target_depth)?.with_spacing(plan.output_spacing())?;
    out.data_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(out)
}

pub fn baseline(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(&cfg.out_dir);
    let mut written = Vec::new();
    for (stem, input) in inputs(cfg)? {
        let out = layout.baseline(&stem);
        save(&cubic_baseline(&load_input(&input)?)?, &out)?;
        written.push(out);
    }
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct EvaluationSummary {
    pub records: Vec<MetricsRecord>,
    pub backbone: Option<String>,
    pub depth_adjustments: Vec<DepthLog>,
    pub report: PathBuf,
}

pub const METHODS: [&str; 2] = ["cubic", "model"];

/// Compare the cubic baseline and the model against the ground truth of every simulated case.
pub fn evaluate(cfg: &PipelineConfig) -> Result<EvaluationSummary> {
    if cfg.simulate.cases.is_empty() {
        return Err(IoError::Config("evaluation needs [[simulate.cases]] with ground truth".into()));
    }
    let layout = Layout::new(&cfg.out_dir);
    let backbone = if cfg.evaluate.lpips { load_backbone_from_env()? } else { None };
    let net = backbone.as_ref().map(|b| b as &dyn PerceptualBackbone);
    let mut records = Vec::new();
    let mut lpips = Vec::new();
    let mut depth = Vec::new();
    for case in &cfg.simulate.cases {
        let stem = case.stem();
        let gt = load_volume(&layout.ground_truth(&case.subject))?;
        let mut outputs = Vec::new();
        for (method, path) in METHODS.iter().zip([layout.baseline(&stem), layout.reconstructed(&stem)]) {
            if !path.is_file() {
                let step = if *method == "cubic" { "baseline" } else { "reconstruct" };
                return Err(IoError::Config(format!("{} does not exist (run `{step}` first)", path.display())));
            }
            let sr = load_volume(&path)?;
            let (sr, adjustment) = reconcile_shapes(&sr, &gt).map_err(|e| {
                IoError::Mismatch(format!("{method} output {} vs ground truth of {}: {e}", path.display(), case.subject))
            })?;
            if let Some(adjustment) = adjustment {
                depth.push(DepthLog { subject: case.subject.clone(), method: method.to_string(), adjustment });
            }
            let ev = evaluate_sr(&sr, &gt, net)?;
            records.push(ev.record(&case.subject, method, case.scale, case.axis));
            if let Some(report) = ev.lpips {
                lpips.push(LpipsLog {
                    subject: case.subject.clone(),
                    method: method.to_string(),
                    scale: case.scale,
                    view: case.axis,
                    report,
                });
            }
            outputs.push(sr);
        }
        if cfg.evaluate.montage {
            let input = load_volume(&layout.simulated(&stem))?;
            let img = report::montage(&[&gt, &input, &outputs[0], &outputs[1]], other_axes(case.axis)[0])?;
            let path = layout.montage(&stem);
            create_parent(&path)?;
            report::write_png(&path, &img)?;
        }
    }
    let name = backbone.as_ref().map(|b| b.name().to_string());
    report::write_metrics(&layout.report(), &records, name.as_deref())?;
    report::write_depth_log(&layout.depth_log(), &depth)?;
    if backbone.is_some() {
        report::write_lpips(&layout.lpips_log(), &lpips)?;
    }
    Ok(EvaluationSummary { records, backbone: name, depth_adjustments: depth, report: layout.report() })
}
