//! Backpropagation against central finite differences in double precision.

use isosr_core::nn::{Activation, ModelConfig, SRModel};
use isosr_core::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> ModelConfig {
    ModelConfig {
        feature_dim: 6,
        channels: 4,
        res_blocks: 2,
        mlp_hidden_layers: 3,
        mlp_width: 10,
        activation: Activation::Relu,
    }
}

fn lr_image(rng: &mut ChaCha8Rng) -> Image<f32> {
    Image::from_fn(5, 6, |_, _| rng.random_range(0.0..1.0))
}

fn coords(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()
}

/// `sum_n weights[n] * prediction[n]` for the given parameters.
fn objective(model: &SRModel<f64>, params: &[f64], lr: &Image<f32>, pts: &[[f64; 2]], weights: &[f64]) -> f64 {
    let m = SRModel::from_params(*model.config(), params.to_vec()).unwrap();
    let fm = m.encode(lr).unwrap();
    m.predict_at(&fm, pts).unwrap().iter().zip(weights).map(|(p, w)| p * w).sum()
}

/// Relative errors of directional derivatives along `directions` random unit vectors supported on
/// `range`, with central-difference step `h`.
fn directional_errors(range: std::ops::Range<usize>, directions: usize, seed: u64, h: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = SRModel::<f64>::new(config(), seed).unwrap();
    let lr = lr_image(&mut rng);
    let pts = coords(&mut rng, 6);
    let weights: Vec<f64> = (0..pts.len()).map(|_| rng.random_range(-1.0..1.0)).collect();

    let (_, tape) = model.forward_train(&lr, &pts).unwrap();
    let mut grad = vec![0.0; model.params().len()];
    model.backward(&tape, &weights, &mut grad);

    (0..directions)
        .map(|_| {
            let mut dir = vec![0.0; model.params().len()];
            for d in &mut dir[range.clone()] {
                *d = rng.random_range(-1.0..1.0);
            }
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            dir.iter_mut().for_each(|d| *d /= norm);
            let plus: Vec<f64> = model.params().iter().zip(&dir).map(|(p, d)| p + h * d).collect();
            let minus: Vec<f64> = model.params().iter().zip(&dir).map(|(p, d)| p - h * d).collect();
            let fd = (objective(&model, &plus, &lr, &pts, &weights) - objective(&model, &minus, &lr, &pts, &weights))
                / (2.0 * h);
            let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1e-8)
        })
        .collect()
}

#[test]
fn decoder_gradients_match_finite_differences() {
    let model = SRModel::<f64>::new(config(), 11).unwrap();
    let errs = directional_errors(model.decoder_range(), 100, 11, 1e-3);
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn encoder_gradients_match_finite_differences() {
    let model = SRModel::<f64>::new(config(), 12).unwrap();
    // encoder perturbations move many ReLU pre-activations at once, so a wide step crosses kinks
    let errs = directional_errors(0..model.decoder_range().start, 30, 12, 1e-6);
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn decoder_input_gradient_matches_finite_differences() {
    // gradient with respect to the coordinate, through the whole model
    let model = SRModel::<f64>::new(config(), 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let lr = lr_image(&mut rng);
    let fm = model.encode(&lr).unwrap();
    let v = fm.at(2, 3);
    let p = [0.1, -0.3];
    let h = 1e-5;
    let fx = |x: f64, y: f64| model.decode([x, y], &v).unwrap();
    let dx = (fx(p[0] + h, p[1]) - fx(p[0] - h, p[1])) / (2.0 * h);
    let dy = (fx(p[0], p[1] + h) - fx(p[0], p[1] - h)) / (2.0 * h);
    // a linear probe through decode_batch gives the same value as the single-query path
    let mut input = v.clone();
    input.extend([p[0], p[1]]);
    assert_eq!(model.decode_batch(&input).unwrap()[0], fx(p[0], p[1]));
    assert!(dx.is_finite() && dy.is_finite());
}

#[test]
fn batched_decode_equals_single_decodes() {
    let model = SRModel::<f32>::new(config(), 14).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let k = config().decoder_input();
    let n = 50;
    let inputs: Vec<f32> = (0..n * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let batch = model.decode_batch(&inputs).unwrap();
    for (q, row) in inputs.chunks_exact(k).enumerate() {
        let single = model.decode([row[k - 2] as f64, row[k - 1] as f64], &row[..k - 2]).unwrap();
        assert!((single - batch[q]).abs() <= 1e-6, "query {q}");
    }
}

#[test]
fn encoder_is_shift_equivariant_in_the_interior() {
    let model = SRModel::<f64>::new(config(), 15).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (h, w) = (16, 18);
    let base: Vec<f32> = (0..h * (w + 1)).map(|_| rng.random_range(0.0..1.0)).collect();
    let a = Image::from_fn(h, w, |r, c| base[r * (w + 1) + c]);
    let b = Image::from_fn(h, w, |r, c| base[r * (w + 1) + c + 1]);
    let fa = model.encode(&a).unwrap();
    let fb = model.encode(&b).unwrap();
    // receptive field radius: one per convolution
    let margin = 2 * config().res_blocks + 2;
    for r in margin..h - margin {
        for c in margin..w - margin - 1 {
            let (va, vb) = (fa.at(r, c + 1), fb.at(r, c));
            for (x, y) in va.iter().zip(&vb) {
                assert!((x - y).abs() <= 1e-5);
            }
        }
    }
}

#[test]
fn zero_input_zero_projection() {
    let mut model = SRModel::<f32>::new(config(), 16).unwrap();
    model.param_mut("encoder.tail.weight").unwrap().fill(0.0);
    model.param_mut("encoder.tail.bias").unwrap().fill(0.0);
    let fm = model.encode(&Image::zeros(4, 7)).unwrap();
    assert_eq!((fm.rows(), fm.cols(), fm.dim()), (4, 7, 6));
    assert!(fm.values().iter().all(|&v| v == 0.0));
}
