//! A small 1D convolutional network: three length-preserving convolutions
//! (kernel lengths 4, 3, 3), each followed by ReLU, and an affine head that
//! maps the final feature map to one scalar.
//!
//! Activations are stored channel-major: `x[c * width + j]`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::{read_json, write_json};

pub const KERNEL_LENGTHS: [usize; 3] = [4, 3, 3];
pub const DEFAULT_WIDTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnConfig {
    /// Filters per convolutional layer.
    pub channels: usize,
    /// Input window length.
    pub width: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            channels: 1,
            width: DEFAULT_WIDTH,
        }
    }
}

/// One convolutional layer. `kernel` is laid out `[out][in][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_len: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel_len: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_len,
            kernel: vec![0.0; out_channels * in_channels * kernel_len],
            bias: vec![0.0; out_channels],
        }
    }

    /// Single-channel layer from a kernel and scalar bias.
    pub fn single(kernel: Vec<f64>, bias: f64) -> Self {
        Self {
            in_channels: 1,
            out_channels: 1,
            kernel_len: kernel.len(),
            kernel,
            bias: vec![bias],
        }
    }

    /// Zero cells padded on the left; the right gets `kernel_len - 1 - left_pad`.
    /// For an even kernel the extra cell goes on the left.
    pub fn left_pad(&self) -> usize {
        self.kernel_len / 2
    }

    fn weight(&self, out_c: usize, in_c: usize, m: usize) -> f64 {
        self.kernel[(out_c * self.in_channels + in_c) * self.kernel_len + m]
    }

    fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    fn check_shape(&self) -> Result<()> {
        if self.kernel.len() != self.out_channels * self.in_channels * self.kernel_len
            || self.bias.len() != self.out_channels
            || self.kernel_len == 0
        {
            return Err(Error::Config(format!(
                "conv layer shape inconsistent: {} kernel weights, {} biases for {}x{}x{}",
                self.kernel.len(),
                self.bias.len(),
                self.out_channels,
                self.in_channels,
                self.kernel_len
            )));
        }
        Ok(())
    }

    /// Index into the unpadded input for output position `j`, tap `m`.
    fn source(&self, j: usize, m: usize, width: usize) -> Option<usize> {
        let p = (j + m).checked_sub(self.left_pad())?;
        (p < width).then_some(p)
    }
}

/// Zero-padded cross-correlation preserving the input width:
/// `out[c][j] = bias[c] + Σ_i Σ_m kernel[c][i][m] · in[i][j + m - left_pad]`.
pub fn conv1d_forward(input: &[f64], width: usize, layer: &ConvLayer) -> Result<Vec<f64>> {
    let expected = layer.in_channels * width;
    if input.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: input.len(),
        });
    }
    let mut out = vec![0.0; layer.out_channels * width];
    for oc in 0..layer.out_channels {
        for j in 0..width {
            let mut acc = layer.bias[oc];
            for ic in 0..layer.in_channels {
                for m in 0..layer.kernel_len {
                    if let Some(p) = layer.source(j, m, width) {
                        acc += layer.weight(oc, ic, m) * input[ic * width + p];
                    }
                }
            }
            out[oc * width + j] = acc;
        }
    }
    Ok(out)
}

pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseHead {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub layers: Vec<ConvLayer>,
    pub head: DenseHead,
}

/// Gradient of the network output with respect to every parameter, in the
/// same flat order as [`CnnModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub Vec<f64>);

impl GradientSet {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn head_bias(&self) -> f64 {
        *self.0.last().expect("gradient set is never empty")
    }
}

struct Activations {
    /// Input to each conv layer, then the final feature map.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each conv layer.
    pre: Vec<Vec<f64>>,
}

impl CnnModel {
    pub fn zeros(config: CnnConfig) -> Self {
        let c = config.channels;
        let layers = KERNEL_LENGTHS
            .iter()
            .enumerate()
            .map(|(l, &k)| ConvLayer::zeros(if l == 0 { 1 } else { c }, c, k))
            .collect();
        Self {
            config,
            layers,
            head: DenseHead {
                weights: vec![0.0; c * config.width],
                bias: 0.0,
            },
        }
    }

    /// Kernel and head weights drawn uniformly from `±1/√fan_in`, biases zero.
    pub fn init_weights(config: CnnConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::zeros(config);
        for layer in &mut model.layers {
            let bound = 1.0 / ((layer.in_channels * layer.kernel_len) as f64).sqrt();
            for w in &mut layer.kernel {
                *w = rng.random_range(-bound..=bound);
            }
        }
        let bound = 1.0 / (model.head.weights.len() as f64).sqrt();
        for w in &mut model.head.weights {
            *w = rng.random_range(-bound..=bound);
        }
        model
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(ConvLayer::param_count)
            .sum::<usize>()
            + self.head.weights.len()
            + 1
    }

    /// Flat parameter vector: per layer kernel then bias, then head weights,
    /// then head bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            p.extend_from_slice(&layer.kernel);
            p.extend_from_slice(&layer.bias);
        }
        p.extend_from_slice(&self.head.weights);
        p.push(self.head.bias);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut rest = params;
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head
        };
        for layer in &mut self.layers {
            let k = layer.kernel.len();
            layer.kernel.copy_from_slice(take(k));
            let b = layer.bias.len();
            layer.bias.copy_from_slice(take(b));
        }
        let h = self.head.weights.len();
        self.head.weights.copy_from_slice(take(h));
        self.head.bias = take(1)[0];
        Ok(())
    }

    /// `true` for kernel and head weights, `false` for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            mask.extend(std::iter::repeat_n(true, layer.kernel.len()));
            mask.extend(std::iter::repeat_n(false, layer.bias.len()));
        }
        mask.extend(std::iter::repeat_n(true, self.head.weights.len()));
        mask.push(false);
        mask
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.config.channels;
        if c == 0 || self.config.width == 0 {
            return Err(Error::Config("channels and width must be positive".into()));
        }
        if self.layers.len() != KERNEL_LENGTHS.len() {
            return Err(Error::Config(format!(
                "expected {} conv layers, found {}",
                KERNEL_LENGTHS.len(),
                self.layers.len()
            )));
        }
        for (l, (layer, &k)) in self.layers.iter().zip(&KERNEL_LENGTHS).enumerate() {
            layer.check_shape()?;
            let in_c = if l == 0 { 1 } else { c };
            if layer.kernel_len != k || layer.in_channels != in_c || layer.out_channels != c {
                return Err(Error::Config(format!(
                    "layer {l} must be {c}x{in_c}x{k}, found {}x{}x{}",
                    layer.out_channels, layer.in_channels, layer.kernel_len
                )));
            }
        }
        if self.head.weights.len() != c * self.config.width {
            return Err(Error::Config(format!(
                "head expects {} weights, found {}",
                c * self.config.width,
                self.head.weights.len()
            )));
        }
        if !self.params().iter().all(|p| p.is_finite()) {
            return Err(Error::Config("non-finite model parameter".into()));
        }
        Ok(())
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.config.width {
            return Err(Error::LengthMismatch {
                expected: self.config.width,
                got: window.len(),
            });
        }
        Ok(())
    }

    fn activations(&self, window: &[f64]) -> Result<Activations> {
        self.check_window(window)?;
        let width = self.config.width;
        let mut inputs = vec![window.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = conv1d_forward(inputs.last().unwrap(), width, layer)?;
            inputs.push(relu(&z));
            pre.push(z);
        }
        Ok(Activations { inputs, pre })
    }

    pub fn forward(&self, window: &[f64]) -> Result<f64> {
        let act = self.activations(window)?;
        let features = act.inputs.last().unwrap();
        Ok(self.head.bias + dot(&self.head.weights, features))
    }

    /// Exact gradient of `forward(window)` scaled by `upstream`.
    pub fn backward(&self, window: &[f64], upstream: f64) -> Result<GradientSet> {
        let act = self.activations(window)?;
        let width = self.config.width;

        let features = act.inputs.last().unwrap();
        let head_w: Vec<f64> = features.iter().map(|a| a * upstream).collect();
        let mut delta: Vec<f64> = self.head.weights.iter().map(|w| w * upstream).collect();

        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &act.inputs[l];
            // ReLU'(0) = 0
            let dz: Vec<f64> = delta
                .iter()
                .zip(&act.pre[l])
                .map(|(d, &z)| if z > 0.0 { *d } else { 0.0 })
                .collect();

            let mut dk = vec![0.0; layer.kernel.len()];
            let mut db = vec![0.0; layer.out_channels];
            let mut dinput = vec![0.0; input.len()];
            for oc in 0..layer.out_channels {
                for j in 0..width {
                    let g = dz[oc * width + j];
                    if g == 0.0 {
                        continue;
                    }
                    db[oc] += g;
                    for ic in 0..layer.in_channels {
                        for m in 0..layer.kernel_len {
                            if let Some(p) = layer.source(j, m, width) {
                                let wi = (oc * layer.in_channels + ic) * layer.kernel_len + m;
                                dk[wi] += g * input[ic * width + p];
                                dinput[ic * width + p] += g * layer.kernel[wi];
                            }
                        }
                    }
                }
            }
            layer_grads.push((dk, db));
            delta = dinput;
        }

        let mut grads = Vec::with_capacity(self.param_count());
        for (dk, db) in layer_grads.into_iter().rev() {
            grads.extend(dk);
            grads.extend(db);
        }
        grads.extend(head_w);
        grads.push(upstream);
        Ok(GradientSet(grads))
    }

    pub fn save(&self, path: &Path, force: bool) -> Result<()> {
        write_json(path, force, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: Self = read_json(path)?;
        model.validate()?;
        Ok(model)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
