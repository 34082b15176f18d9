//! Command-line front end.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{IoError, Result};
use crate::pipeline;
use crate::synthetic::{blob_phantom, random_blobs};
use crate::volume_io::save_volume;

#[derive(Debug, Parser)]
#[command(name = "isosr", version, about = "Self-supervised isotropic super-resolution of anisotropic MR volumes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Degrade isotropic ground truths into anisotropic inputs.
    Simulate(Common),
    /// Extract HR/LR slice pairs from every input.
    BuildDataset(Common),
    /// Train the slice model; `--checkpoint` resumes from a saved state.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Reconstruct every input to isotropic resolution.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Model to use (default: the best checkpoint in the output directory).
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Cubic-spline resampling of every input to the reconstruction grid.
    Baseline(Common),
    /// Score cubic and model outputs against ground truth.
    Evaluate(Common),
    /// Write a synthetic isotropic phantom made of Gaussian blobs.
    Phantom {
        /// Output NIfTI path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, default_value_t = 48)]
        size: usize,
        #[arg(long, default_value_t = 40)]
        blobs: usize,
        #[arg(long, default_value_t = 2.0)]
        sigma_min: f64,
        #[arg(long, default_value_t = 4.0)]
        sigma_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn resolve(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let c = PipelineConfig::default();
            c.validate()?;
            c
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    pipeline::write_config(&cfg)?;
    println!("seed {}  out {}", cfg.seed, cfg.out_dir.display());
    Ok(cfg)
}

fn list(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn phantom(out: &Path, size: usize, count: usize, sigma: (f64, f64), seed: u64) -> Result<()> {
    if size == 0 || !(sigma.0 > 0.0 && sigma.1 > sigma.0) {
        return Err(IoError::Config("phantom needs size >= 1 and 0 < sigma-min < sigma-max".into()));
    }
    let dims = [size; 3];
    save_volume(&blob_phantom(dims, &random_blobs(dims, count, sigma, seed))?, out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate(c) => list(&pipeline::simulate(&resolve(&c)?)?),
        Command::BuildDataset(c) => {
            let s = pipeline::build(&resolve(&c)?)?;
            println!("{} pairs in {}", s.manifest.pairs.len(), s.dir.display());
            for (scale, n) in s.manifest.scale_histogram() {
                println!("  scale {scale}: {n} pairs");
            }
            if !s.manifest.skipped_sources.is_empty() {
                println!("skipped isotropic inputs: {:?}", s.manifest.skipped_sources);
            }
            println!("checksum {}", s.checksum);
        }
        Command::Train { common, checkpoint } => {
            let cfg = resolve(&common)?;
            let s = pipeline::train(&cfg, checkpoint.as_deref(), |r| {
                println!(
                    "epoch {:>4}  train {:.6}  val {:.6}{}",
                    r.epoch,
                    r.train_loss,
                    r.val_loss,
                    if r.is_best { "  *" } else { "" }
                )
            })?;
            println!(
                "best epoch {} (val {:.6}) -> {}",
                s.best_epoch,
                s.best_val_loss,
                s.best_checkpoint.display()
            );
        }
        Command::Reconstruct { common, checkpoint } => {
            list(&pipeline::reconstruct(&resolve(&common)?, checkpoint.as_deref())?)
        }
        Command::Baseline(c) => list(&pipeline::baseline(&resolve(&c)?)?),
        Command::Evaluate(c) => {
            let s = pipeline::evaluate(&resolve(&c)?)?;
            for d in &s.depth_adjustments {
                let a = d.adjustment;
                println!("{} {}: depth along axis {} adjusted {} -> {}", d.subject, d.method, a.axis, a.from, a.to);
            }
            if s.backbone.is_none() {
                println!("lpips: no backbone in ${}, reported as NA", crate::perceptual::BACKBONE_ENV);
            }
            println!("{}", isosr_core::eval::MetricsRecord::HEADER);
            for r in &s.records {
                println!("{}", r.to_row());
            }
            println!("wrote {}", s.report.display());
        }
        Command::Phantom { out, size, blobs, sigma_min, sigma_max, seed } => {
            phantom(&out, size, blobs, (sigma_min, sigma_max), seed)?
        }
    }
    Ok(())
}

/// Parse `args` (including the program name), run the command and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
