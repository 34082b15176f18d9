#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isosr::synthetic::{blob_phantom, random_blobs};
use isosr::volume_io::save_volume;

pub const BIN: &str = env!("CARGO_BIN_EXE_isosr");

/// Small isotropic phantom written to `<dir>/gt.nii.gz`.
pub fn write_toy_gt(dir: &Path, size: usize) -> PathBuf {
    let dims = [size; 3];
    let path = dir.join("gt.nii.gz");
    save_volume(&blob_phantom(dims, &random_blobs(dims, 12, (2.0, 4.0), 1)).unwrap(), &path).unwrap();
    path
}

/// Tiny model and training recipe; `cases` are `(scale, axis)` simulations of `gt.nii.gz`.
pub fn toy_config(dir: &Path, epochs: usize, cases: &[(f64, usize)]) -> PathBuf {
    let mut text = format!(
        "seed = 7\nout_dir = \"out\"\n\n[model]\nfeature_dim = 8\nchannels = 8\nres_blocks = 1\n\
         mlp_hidden_layers = 2\nmlp_width = 32\n\n[train]\nepochs = {epochs}\nqueries_per_pair = 256\n"
    );
    for (scale, axis) in cases {
        text.push_str(&format!(
            "\n[[simulate.cases]]\nsubject = \"toy\"\nground_truth = \"gt.nii.gz\"\nscale = {scale:?}\naxis = {axis}\n"
        ));
    }
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn isosr(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove(isosr::perceptual::BACKBONE_ENV).output().unwrap()
}

pub fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// simulate, build-dataset, train, reconstruct, baseline, evaluate.
pub fn run_pipeline(config: &Path) {
    let c = config.to_str().unwrap();
    for cmd in ["simulate", "build-dataset", "train", "reconstruct", "baseline", "evaluate"] {
        assert_ok(&isosr(&[cmd, "--config", c]));
    }
}
