//! The continuous slice model: residual CNN encoder, bilinear feature query, MLP decoder.
//!
//! All parameters live in one flat vector described by a [`ParamSpec`] table, which keeps the
//! optimizer, checkpoints and gradient checks independent of the architecture.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conv::Conv3x3;
use super::grid::{bilinear_taps, gather, make_hr_grid, scatter, FeatureMap, Taps};
use super::scalar::{gemm, Mat, Scalar};
use crate::error::{Error, Result};
use crate::image::Image;

/// Queries decoded per GEMM batch at inference time.
const INFERENCE_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    LeakyRelu,
}

const LEAKY_SLOPE: f64 = 0.01;

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leaky_relu",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "leaky_relu" => Some(Activation::LeakyRelu),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Scalar>(&self, v: T) -> T {
        if v > T::zero() {
            v
        } else {
            match self {
                Activation::Relu => T::zero(),
                Activation::LeakyRelu => v * T::of(LEAKY_SLOPE),
            }
        }
    }

    /// Derivative, evaluated from the activation's output (the sign is preserved).
    #[inline]
    fn grad_from_output<T: Scalar>(&self, out: T) -> T {
        if out > T::zero() {
            T::one()
        } else {
            match self {
                Activation::Relu => T::zero(),
                Activation::LeakyRelu => T::of(LEAKY_SLOPE),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Feature dimension `d` of the encoder output.
    pub feature_dim: usize,
    /// Channels inside the encoder.
    pub channels: usize,
    pub res_blocks: usize,
    pub mlp_hidden_layers: usize,
    pub mlp_width: usize,
    /// Activation used in residual blocks and MLP hidden layers.
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            feature_dim: 128,
            channels: 64,
            res_blocks: 16,
            mlp_hidden_layers: 5,
            mlp_width: 256,
            activation: Activation::Relu,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 || self.channels == 0 || self.mlp_width == 0 {
            return Err(Error::Config(format!("all widths must be >= 1: {self:?}")));
        }
        Ok(())
    }

    pub fn decoder_input(&self) -> usize {
        self.feature_dim + 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvSlot {
    conv: Conv3x3,
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone, Copy)]
struct LinearSlot {
    fan_in: usize,
    fan_out: usize,
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    specs: Vec<ParamSpec>,
    head: ConvSlot,
    blocks: Vec<(ConvSlot, ConvSlot)>,
    tail: ConvSlot,
    mlp: Vec<LinearSlot>,
    encoder_len: usize,
    total: usize,
}

impl Layout {
    fn new(cfg: &ModelConfig) -> Self {
        let mut specs = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let spec = ParamSpec { name, shape, offset };
            offset += spec.len();
            let at = spec.offset;
            specs.push(spec);
            at
        };
        let conv = |push: &mut dyn FnMut(String, Vec<usize>) -> usize, name: &str, cin, cout| {
            let weight = push(format!("{name}.weight"), vec![cout, cin, 3, 3]);
            let bias = push(format!("{name}.bias"), vec![cout]);
            ConvSlot { conv: Conv3x3 { cin, cout }, weight, bias }
        };
        let head = conv(&mut push, "encoder.head", 1, cfg.channels);
        let blocks = (0..cfg.res_blocks)
            .map(|i| {
                let a = conv(&mut push, &format!("encoder.blocks.{i}.conv1"), cfg.channels, cfg.channels);
                let b = conv(&mut push, &format!("encoder.blocks.{i}.conv2"), cfg.channels, cfg.channels);
                (a, b)
            })
            .collect();
        let tail = conv(&mut push, "encoder.tail", cfg.channels, cfg.feature_dim);
        let encoder_len = tail.bias + cfg.feature_dim;
        let mut widths = vec![cfg.decoder_input()];
        widths.extend(core::iter::repeat_n(cfg.mlp_width, cfg.mlp_hidden_layers));
        widths.push(1);
        let mlp = widths
            .windows(2)
            .enumerate()
            .map(|(j, w)| {
                let weight = push(format!("decoder.layers.{j}.weight"), vec![w[1], w[0]]);
                let bias = push(format!("decoder.layers.{j}.bias"), vec![w[1]]);
                LinearSlot { fan_in: w[0], fan_out: w[1], weight, bias }
            })
            .collect();
        Self { specs, head, blocks, tail, mlp, encoder_len, total: offset }
    }
}

/// Intermediate activations kept for backpropagation through the encoder.
struct EncoderTape<T> {
    rows: usize,
    cols: usize,
    input: Vec<T>,
    /// Input of each residual block, then the input of the tail convolution.
    block_inputs: Vec<Vec<T>>,
    /// Activated output of each block's first convolution.
    block_mids: Vec<Vec<T>>,
}

/// Intermediate activations kept for backpropagation through the decoder.
struct DecoderTape<T> {
    n: usize,
    /// Input of every linear layer; the first is `feature ++ coordinate`.
    inputs: Vec<Vec<T>>,
}

/// Everything needed to backpropagate one training query batch.
pub struct ForwardTape<T> {
    encoder: EncoderTape<T>,
    decoder: DecoderTape<T>,
    taps: Vec<Taps>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SRModel<T = f32> {
    config: ModelConfig,
    layout_specs: Vec<ParamSpec>,
    params: Vec<T>,
}

impl<T: Scalar> SRModel<T> {
    /// Fresh model with fan-in uniform initialization: every weight and bias of a layer with
    /// fan-in `n` is drawn from `U(-1/sqrt(n), 1/sqrt(n))`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(super::train::STREAM_INIT);
        let mut params = vec![T::zero(); layout.total];
        for spec in &layout.specs {
            // weights are [out, in, ...]; biases share the layer's fan-in
            let fan_in = Self::fan_in_of(&layout, spec);
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            for p in &mut params[spec.range()] {
                *p = T::of(rng.random_range(-bound..bound));
            }
        }
        Ok(Self { config, layout_specs: layout.specs, params })
    }

    fn fan_in_of(layout: &Layout, spec: &ParamSpec) -> usize {
        let base = spec.name.rsplit_once('.').map(|(b, _)| b).unwrap_or("");
        let weight = format!("{base}.weight");
        layout
            .specs
            .iter()
            .find(|s| s.name == weight)
            .map(|s| s.shape[1..].iter().product())
            .unwrap_or(1)
    }

    /// Rebuild a model from a flat parameter vector laid out as [`SRModel::param_specs`].
    pub fn from_params(config: ModelConfig, params: Vec<T>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(Error::ConfigMismatch(format!(
                "expected {} parameters for {config:?}, got {}",
                layout.total,
                params.len()
            )));
        }
        Ok(Self { config, layout_specs: layout.specs, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn param_specs(&self) -> &[ParamSpec] {
        &self.layout_specs
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&[T]> {
        self.layout_specs.iter().find(|s| s.name == name).map(|s| &self.params[s.range()])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut [T]> {
        let range = self.layout_specs.iter().find(|s| s.name == name)?.range();
        Some(&mut self.params[range])
    }

    /// Index range of the decoder parameters within [`SRModel::params`].
    pub fn decoder_range(&self) -> core::ops::Range<usize> {
        let layout = Layout::new(&self.config);
        layout.encoder_len..layout.total
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Same model in another precision.
    pub fn cast<U: Scalar>(&self) -> SRModel<U> {
        SRModel {
            config: self.config,
            layout_specs: self.layout_specs.clone(),
            params: self.params.iter().map(|&p| U::of(p.f64())).collect(),
        }
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.config)
    }

    fn conv_forward(&self, slot: &ConvSlot, x: &[T], h: usize, w: usize, out: &mut [T], scratch: &mut Vec<T>) {
        let wt = &self.params[slot.weight..slot.weight + slot.conv.weight_len()];
        let b = &self.params[slot.bias..slot.bias + slot.conv.cout];
        slot.conv.forward(wt, b, x, h, w, out, scratch);
    }

    fn check_lr(lr: &Image<f32>) -> Result<()> {
        if lr.rows() < 2 || lr.cols() < 2 {
            return Err(Error::Shape(format!("LR slice {:?} must be at least 2x2", lr.shape())));
        }
        if !lr.is_finite() {
            return Err(Error::NonFinite("LR slice"));
        }
        Ok(())
    }

    fn run_encoder(&self, lr: &Image<f32>, mut tape: Option<&mut EncoderTape<T>>) -> Result<FeatureMap<T>> {
        Self::check_lr(lr)?;
        let layout = self.layout();
        let act = self.config.activation;
        let (h, w) = lr.shape();
        let hw = h * w;
        let c = self.config.channels;
        let input: Vec<T> = lr.data().iter().map(|&v| T::of(v as f64)).collect();
        let mut scratch = Vec::new();
        let mut x = vec![T::zero(); c * hw];
        self.conv_forward(&layout.head, &input, h, w, &mut x, &mut scratch);
        let mut mid = vec![T::zero(); c * hw];
        let mut y = vec![T::zero(); c * hw];
        for (a, b) in &layout.blocks {
            self.conv_forward(a, &x, h, w, &mut mid, &mut scratch);
            mid.iter_mut().for_each(|v| *v = act.apply(*v));
            self.conv_forward(b, &mid, h, w, &mut y, &mut scratch);
            for (yv, xv) in y.iter_mut().zip(&x) {
                *yv += *xv;
            }
            if let Some(t) = tape.as_deref_mut() {
                t.block_inputs.push(core::mem::take(&mut x));
                t.block_mids.push(mid.clone());
                x = vec![T::zero(); c * hw];
            }
            core::mem::swap(&mut x, &mut y);
        }
        let d = self.config.feature_dim;
        let mut feats = vec![T::zero(); d * hw];
        self.conv_forward(&layout.tail, &x, h, w, &mut feats, &mut scratch);
        if let Some(t) = tape {
            t.rows = h;
            t.cols = w;
            t.input = input;
            t.block_inputs.push(x);
        }
        let fm = FeatureMap::from_channels(d, h, w, feats)?;
        if !fm.is_finite() {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(fm)
    }

    /// Encode an LR slice into a feature map of the same spatial size.
    pub fn encode(&self, lr: &Image<f32>) -> Result<FeatureMap<T>> {
        self.run_encoder(lr, None)
    }

    fn run_decoder(&self, inputs: Vec<T>, n: usize, tape: Option<&mut DecoderTape<T>>) -> Vec<T> {
        let layout = self.layout();
        let act = self.config.activation;
        let last = layout.mlp.len() - 1;
        let mut x = inputs;
        let mut kept = Vec::new();
        for (j, l) in layout.mlp.iter().enumerate() {
            let mut y = vec![T::zero(); n * l.fan_out];
            let bias = &self.params[l.bias..l.bias + l.fan_out];
            for row in y.chunks_exact_mut(l.fan_out) {
                row.copy_from_slice(bias);
            }
            let wt = &self.params[l.weight..l.weight + l.fan_in * l.fan_out];
            gemm(
                Mat::row_major(&x, n, l.fan_in),
                Mat::row_major(wt, l.fan_out, l.fan_in).t(),
                T::one(),
                &mut y,
            );
            if j != last {
                y.iter_mut().for_each(|v| *v = act.apply(*v));
            }
            if tape.is_some() {
                kept.push(x);
            }
            x = y;
        }
        if let Some(t) = tape {
            t.n = n;
            t.inputs = kept;
        }
        x
    }

    /// Decode a batch of `n` decoder inputs laid out row-major as `[feature (d), x, y]`.
    pub fn decode_batch(&self, inputs: &[T]) -> Result<Vec<T>> {
        let k = self.config.decoder_input();
        if !inputs.len().is_multiple_of(k) {
            return Err(Error::Shape(format!("decoder input length {} not a multiple of {k}", inputs.len())));
        }
        if !inputs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("decoder input"));
        }
        Ok(self.run_decoder(inputs.to_vec(), inputs.len() / k, None))
    }

    /// Intensity at coordinate `p` given the queried feature `v`.
    pub fn decode(&self, p: [f64; 2], v: &[T]) -> Result<T> {
        if v.len() != self.config.feature_dim {
            return Err(Error::Shape(format!("feature of length {} (expected {})", v.len(), self.config.feature_dim)));
        }
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::NonFinite("coordinate"));
        }
        if !(-1.0..=1.0).contains(&p[0]) || !(-1.0..=1.0).contains(&p[1]) {
            return Err(Error::Coordinate(p[0], p[1]));
        }
        let mut input = v.to_vec();
        input.push(T::of(p[0]));
        input.push(T::of(p[1]));
        Ok(self.decode_batch(&input)?[0])
    }

    fn decoder_inputs(&self, fm: &FeatureMap<T>, coords: &[[f64; 2]], taps: &[Taps]) -> Vec<T> {
        let k = self.config.decoder_input();
        let d = self.config.feature_dim;
        let mut inputs = vec![T::zero(); coords.len() * k];
        gather(fm, taps, &mut inputs, k);
        for (row, p) in inputs.chunks_exact_mut(k).zip(coords) {
            row[d] = T::of(p[0]);
            row[d + 1] = T::of(p[1]);
        }
        inputs
    }

    /// Predictions at arbitrary coordinates for an already-encoded slice.
    pub fn predict_at(&self, fm: &FeatureMap<T>, coords: &[[f64; 2]]) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(coords.len());
        for chunk in coords.chunks(INFERENCE_CHUNK) {
            let taps = bilinear_taps(chunk, fm.rows(), fm.cols())?;
            let inputs = self.decoder_inputs(fm, chunk, &taps);
            out.extend(self.run_decoder(inputs, chunk.len(), None));
        }
        Ok(out)
    }

    /// Super-resolve `lr` onto an `h x w` grid. Any target shape works, including
    /// non-integer ratios to the input.
    pub fn forward(&self, lr: &Image<f32>, target: (usize, usize)) -> Result<Image<f32>> {
        let fm = self.encode(lr)?;
        let grid = make_hr_grid(target.0, target.1)?;
        let pred = self.predict_at(&fm, grid.coords())?;
        Image::from_vec(target.0, target.1, pred.into_iter().map(|v| v.f64() as f32).collect())
    }

    /// Predictions at `coords`, keeping what [`SRModel::backward`] needs.
    pub fn forward_train(&self, lr: &Image<f32>, coords: &[[f64; 2]]) -> Result<(Vec<T>, ForwardTape<T>)> {
        let mut enc = EncoderTape { rows: 0, cols: 0, input: Vec::new(), block_inputs: Vec::new(), block_mids: Vec::new() };
        let fm = self.run_encoder(lr, Some(&mut enc))?;
        let taps = bilinear_taps(coords, fm.rows(), fm.cols())?;
        let inputs = self.decoder_inputs(&fm, coords, &taps);
        let mut dec = DecoderTape { n: 0, inputs: Vec::new() };
        let pred = self.run_decoder(inputs, coords.len(), Some(&mut dec));
        Ok((pred, ForwardTape { encoder: enc, decoder: dec, taps }))
    }

    /// Accumulate `d(sum_n dpred[n] * pred[n]) / d(params)` into `grad`.
    pub fn backward(&self, tape: &ForwardTape<T>, dpred: &[T], grad: &mut [T]) {
        let dinput = self.decoder_backward(&tape.decoder, dpred, grad);
        let enc = &tape.encoder;
        let d = self.config.feature_dim;
        let hw = enc.rows * enc.cols;
        let mut dfm = vec![T::zero(); d * hw];
        scatter(&tape.taps, &dinput, self.config.decoder_input(), d, hw, &mut dfm);
        self.encoder_backward(enc, &dfm, grad);
    }

    /// Returns the gradient with respect to the decoder input `[n][d + 2]`.
    fn decoder_backward(&self, tape: &DecoderTape<T>, dpred: &[T], grad: &mut [T]) -> Vec<T> {
        let layout = self.layout();
        let act = self.config.activation;
        let n = tape.n;
        let mut dy = dpred.to_vec();
        for (j, l) in layout.mlp.iter().enumerate().rev() {
            let x = &tape.inputs[j];
            let wt = &self.params[l.weight..l.weight + l.fan_in * l.fan_out];
            {
                let (gw, gb) = grad[l.weight..].split_at_mut(l.bias - l.weight);
                for row in dy.chunks_exact(l.fan_out) {
                    for (b, &v) in gb[..l.fan_out].iter_mut().zip(row) {
                        *b += v;
                    }
                }
                gemm(
                    Mat::row_major(&dy, n, l.fan_out).t(),
                    Mat::row_major(x, n, l.fan_in),
                    T::one(),
                    &mut gw[..l.fan_in * l.fan_out],
                );
            }
            let mut dx = vec![T::zero(); n * l.fan_in];
            gemm(
                Mat::row_major(&dy, n, l.fan_out),
                Mat::row_major(wt, l.fan_out, l.fan_in),
                T::zero(),
                &mut dx,
            );
            if j > 0 {
                // x is the activated output of the previous layer
                for (g, &xv) in dx.iter_mut().zip(x) {
                    *g *= act.grad_from_output(xv);
                }
            }
            dy = dx;
        }
        dy
    }

    fn encoder_backward(&self, tape: &EncoderTape<T>, dfm: &[T], grad: &mut [T]) {
        let layout = self.layout();
        let act = self.config.activation;
        let (h, w) = (tape.rows, tape.cols);
        let c = self.config.channels;
        let mut scratch = Vec::new();
        let conv_back = |slot: &ConvSlot, x: &[T], dy: &[T], dx: Option<&mut [T]>, grad: &mut [T], scratch: &mut Vec<T>| {
            let wlen = slot.conv.weight_len();
            let (gw, gb) = grad[slot.weight..].split_at_mut(slot.bias - slot.weight);
            slot.conv.backward(
                &self.params[slot.weight..slot.weight + wlen],
                x,
                h,
                w,
                dy,
                &mut gw[..wlen],
                &mut gb[..slot.conv.cout],
                dx,
                scratch,
            );
        };
        let nb = layout.blocks.len();
        let mut dx = vec![T::zero(); c * h * w];
        conv_back(&layout.tail, &tape.block_inputs[nb], dfm, Some(&mut dx), grad, &mut scratch);
        let mut dmid = vec![T::zero(); c * h * w];
        let mut dskip = vec![T::zero(); c * h * w];
        for (i, (a, b)) in layout.blocks.iter().enumerate().rev() {
            let mid = &tape.block_mids[i];
            conv_back(b, mid, &dx, Some(&mut dmid), grad, &mut scratch);
            for (g, &m) in dmid.iter_mut().zip(mid) {
                *g *= act.grad_from_output(m);
            }
            conv_back(a, &tape.block_inputs[i], &dmid, Some(&mut dskip), grad, &mut scratch);
            for (g, &s) in dx.iter_mut().zip(&dskip) {
                *g += s;
            }
        }
        conv_back(&layout.head, &tape.input, &dx, None, grad, &mut scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig { feature_dim: 4, channels: 3, res_blocks: 2, mlp_hidden_layers: 2, mlp_width: 6, activation: Activation::Relu }
    }

    fn smooth(rows: usize, cols: usize) -> Image<f32> {
        Image::from_fn(rows, cols, |r, c| 0.5 + 0.3 * libm::sinf(r as f32 * 0.7 + c as f32 * 0.4))
    }

    #[test]
    fn layout_names_and_sizes() {
        let m = SRModel::<f32>::new(tiny(), 1).unwrap();
        let specs = m.param_specs();
        assert_eq!(specs[0].name, "encoder.head.weight");
        assert_eq!(specs[0].shape, [3, 1, 3, 3]);
        assert_eq!(m.param("decoder.layers.0.weight").unwrap().len(), 6 * 6);
        assert_eq!(m.param("decoder.layers.2.weight").unwrap().len(), 6);
        assert_eq!(m.param("decoder.layers.2.bias").unwrap().len(), 1);
        let total: usize = specs.iter().map(|s| s.len()).sum();
        assert_eq!(total, m.params().len());
        assert_eq!(m.decoder_range().end, total);
    }

    #[test]
    fn init_respects_fan_in_bounds() {
        let m = SRModel::<f32>::new(ModelConfig::default(), 3).unwrap();
        let w = m.param("encoder.blocks.0.conv1.weight").unwrap();
        let bound = 1.0 / (64.0f32 * 9.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= bound));
        let b = m.param("decoder.layers.0.bias").unwrap();
        let bound = 1.0 / 130f32.sqrt();
        assert!(b.iter().all(|v| v.abs() <= bound));
        assert!(b.iter().any(|v| v.abs() > bound / 4.0));
    }

    #[test]
    fn encode_preserves_resolution() {
        let m = SRModel::<f32>::new(tiny(), 1).unwrap();
        let fm = m.encode(&smooth(10, 20)).unwrap();
        assert_eq!((fm.rows(), fm.cols(), fm.dim()), (10, 20, 4));
        assert!(m.encode(&smooth(1, 20)).is_err());
        let mut bad = smooth(4, 4);
        bad.set(0, 0, f32::NAN);
        assert_eq!(m.encode(&bad), Err(Error::NonFinite("LR slice")));
    }

    #[test]
    fn zero_output_layer_gives_zero() {
        let mut m = SRModel::<f64>::new(tiny(), 2).unwrap();
        m.param_mut("decoder.layers.2.weight").unwrap().fill(0.0);
        m.param_mut("decoder.layers.2.bias").unwrap().fill(0.0);
        assert_eq!(m.decode([0.3, -0.7], &[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
        assert!(m.decode([0.3, -0.7], &[1.0]).is_err());
        assert!(m.decode([f64::NAN, 0.0], &[0.0; 4]).is_err());
    }

    #[test]
    fn forward_any_target_shape() {
        let m = SRModel::<f32>::new(tiny(), 5).unwrap();
        let lr = smooth(6, 9);
        for target in [(6, 9), (12, 9), (15, 9), (17, 11), (1, 1)] {
            let out = m.forward(&lr, target).unwrap();
            assert_eq!(out.shape(), target);
            assert!(out.is_finite());
        }
    }

    #[test]
    fn forward_train_matches_inference() {
        let m = SRModel::<f64>::new(tiny(), 6).unwrap();
        let lr = smooth(5, 7);
        let coords = [[-0.9, 0.1], [0.33, 0.5], [0.99, -0.99]];
        let (pred, _) = m.forward_train(&lr, &coords).unwrap();
        let fm = m.encode(&lr).unwrap();
        assert_eq!(pred, m.predict_at(&fm, &coords).unwrap());
    }
}
