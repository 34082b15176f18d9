mod common;

use isosr_core::nn::{train, Activation, Adam, ModelConfig, SRModel, TrainConfig, Trainer};
use isosr_core::{Error, Image, SRDataset, SlicePair};

fn small() -> ModelConfig {
    ModelConfig {
        feature_dim: 8,
        channels: 8,
        res_blocks: 1,
        mlp_hidden_layers: 2,
        mlp_width: 32,
        activation: Activation::Relu,
    }
}

fn dataset(n: usize, k: f64) -> SRDataset {
    let pairs = (0..n)
        .map(|i| SlicePair::synthesize(common::band_limited(24, 20, i as u64), k, 0).unwrap())
        .collect();
    SRDataset::from_pairs(pairs).unwrap()
}

fn cfg(epochs: usize) -> TrainConfig {
    TrainConfig { learning_rate: 1e-3, epochs, queries_per_pair: 256, seed: 7, val_fraction: 0.05, lr_halving_epochs: 0 }
}

#[test]
fn same_seed_same_curve() {
    let ds = dataset(6, 2.0);
    let run = || train(SRModel::new(small(), 7).unwrap(), &ds, cfg(3), |_, _| {}).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.log, b.log);
    assert_eq!(a.best.params(), b.best.params());
    assert_eq!(a.last.params(), b.last.params());
    let c = train(SRModel::new(small(), 8).unwrap(), &ds, TrainConfig { seed: 8, ..cfg(3) }, |_, _| {}).unwrap();
    assert_ne!(a.log, c.log);
}

#[test]
fn resuming_matches_an_uninterrupted_run() {
    let ds = dataset(5, 2.5);
    let full = train(SRModel::new(small(), 7).unwrap(), &ds, cfg(4), |_, _| {}).unwrap();

    let mut first = Trainer::new(SRModel::new(small(), 7).unwrap(), &ds, cfg(4)).unwrap();
    let mut log = vec![first.run_epoch().unwrap(), first.run_epoch().unwrap()];
    let (m, v) = first.optimizer().moments();
    let adam = Adam::from_state(first.optimizer().step_count(), m.to_vec(), v.to_vec()).unwrap();
    let mut second = Trainer::resume(first.model().clone(), adam, 2, first.best().cloned(), &ds, cfg(4)).unwrap();
    while !second.is_done() {
        log.push(second.run_epoch().unwrap());
    }
    assert_eq!(log, full.log);
    assert_eq!(second.model().params(), full.last.params());
}

#[test]
fn best_checkpoint_tracks_validation_minimum() {
    let ds = dataset(4, 2.0);
    let out = train(SRModel::new(small(), 1).unwrap(), &ds, cfg(6), |_, _| {}).unwrap();
    let best = out.log.iter().rfind(|r| r.is_best).unwrap();
    let min = out.log.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(best.val_loss, min);
    assert!(out.log.iter().enumerate().all(|(i, r)| r.epoch == i + 1 && r.iterations == 3));
}

#[test]
fn loss_decreases_on_a_single_smooth_pair() {
    // one pair serves as both training and validation set; one Adam step per epoch
    let ds = dataset(1, 2.0);
    let cfg = TrainConfig { learning_rate: 1e-4, epochs: 10, queries_per_pair: 2048, seed: 3, val_fraction: 0.05, lr_halving_epochs: 0 };
    let out = train(SRModel::new(small(), 3).unwrap(), &ds, cfg, |_, _| {}).unwrap();
    let val: Vec<f64> = out.log.iter().map(|r| r.val_loss).collect();
    assert!(val.windows(2).all(|w| w[1] < w[0]), "{val:?}");
}

#[test]
fn zero_output_layer_predicts_zero() {
    let mut model = SRModel::<f32>::new(small(), 4).unwrap();
    let last: Vec<String> = model.param_specs().iter().rev().take(2).map(|s| s.name.clone()).collect();
    for name in &last {
        model.param_mut(name).unwrap().fill(0.0);
    }
    let out = model.forward(&common::band_limited(6, 9, 4), (13, 9)).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.0));
    let v = vec![0.3f32; 8];
    assert_eq!(model.decode([0.9, -0.2], &v).unwrap(), 0.0);
}

#[test]
fn one_model_serves_every_scale() {
    let ds = dataset(3, 2.0);
    let model = train(SRModel::new(small(), 5).unwrap(), &ds, cfg(2), |_, _| {}).unwrap().best;
    let lr = common::band_limited(10, 12, 99);
    for h in 10..=40 {
        let out = model.forward(&lr, (h, 12)).unwrap();
        assert_eq!(out.shape(), (h, 12));
        assert!(out.is_finite(), "target height {h}");
    }
    assert_eq!(model.forward(&lr, (25, 12)).unwrap().shape(), (25, 12));
    assert_eq!(model.forward(&lr, (30, 12)).unwrap().shape(), (30, 12));
}

#[test]
fn rejects_bad_inputs() {
    let model = SRModel::<f32>::new(small(), 6).unwrap();
    assert!(model.encode(&Image::filled(1, 5, 0.0)).is_err());
    let mut bad = Image::filled(4, 4, 0.0f32);
    bad.set(1, 1, f32::NAN);
    assert!(model.encode(&bad).is_err());
    assert!(matches!(model.decode([1.5, 0.0], &[0.0; 8]), Err(Error::Coordinate(..))));
    let empty = SRDataset::from_pairs(vec![]);
    assert!(empty.is_err() || Trainer::new(model.clone(), empty.as_ref().unwrap(), cfg(1)).is_err());
    let mismatched = ModelConfig { feature_dim: 9, ..small() };
    assert!(matches!(
        SRModel::<f32>::from_params(mismatched, model.params().to_vec()),
        Err(Error::ConfigMismatch(_))
    ));
}
