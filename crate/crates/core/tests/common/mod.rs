//! Reference computations written independently of the library code paths
//! they check.
#![allow(dead_code)]

use hmcast::cnn::{CnnConfig, ConvLayer, DenseHead};
use hmcast::CnnModel;
use num::{BigRational, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Least-squares quadratic in raw `Δt = t - t0` via the 3×3 normal equations
/// in exact rational arithmetic (Cramer's rule).
pub fn quadratic_normal_equations(epochs: &[i64], values: &[f64]) -> [f64; 3] {
    let t0 = epochs[0];
    let mut s = vec![BigRational::zero(); 5];
    let mut b = vec![BigRational::zero(); 3];
    for (&e, &y) in epochs.iter().zip(values) {
        let dt = BigRational::from_integer((e - t0).into());
        let y = exact(y);
        let mut p = BigRational::from_integer(1.into());
        for k in 0..5 {
            s[k] += &p;
            if k < 3 {
                b[k] += &p * &y;
            }
            p *= &dt;
        }
    }
    let m = |i: usize, j: usize| s[i + j].clone();
    let det3 = |a: [[BigRational; 3]; 3]| {
        &a[0][0] * (&a[1][1] * &a[2][2] - &a[1][2] * &a[2][1])
            - &a[0][1] * (&a[1][0] * &a[2][2] - &a[1][2] * &a[2][0])
            + &a[0][2] * (&a[1][0] * &a[2][1] - &a[1][1] * &a[2][0])
    };
    let full = [
        [m(0, 0), m(0, 1), m(0, 2)],
        [m(1, 0), m(1, 1), m(1, 2)],
        [m(2, 0), m(2, 1), m(2, 2)],
    ];
    let d = det3(full.clone());
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut a = full.clone();
        for row in 0..3 {
            a[row][col] = b[row].clone();
        }
        *slot = to_f64(&(det3(a) / &d));
    }
    out
}

/// Mean of squared differences summed exactly, then rooted.
pub fn rmse_exact(preds: &[f64], targets: &[f64]) -> f64 {
    let mut acc = BigRational::zero();
    for (p, t) in preds.iter().zip(targets) {
        let d = exact(*p) - exact(*t);
        acc += &d * &d;
    }
    let n = BigRational::from_integer((preds.len() as i64).into());
    to_f64(&(acc / n)).sqrt()
}

/// Cross-correlation over an explicitly zero-padded copy of each input
/// channel; `left = k / 2` cells in front, the rest behind.
pub fn naive_conv(input: &[f64], width: usize, layer: &ConvLayer) -> Vec<f64> {
    let k = layer.kernel_len;
    let left = k / 2;
    let right = k - 1 - left;
    let mut out = Vec::new();
    for oc in 0..layer.out_channels {
        for j in 0..width {
            let mut acc = layer.bias[oc];
            for ic in 0..layer.in_channels {
                let mut padded = vec![0.0; left];
                padded.extend_from_slice(&input[ic * width..(ic + 1) * width]);
                padded.extend(std::iter::repeat_n(0.0, right));
                for m in 0..k {
                    acc += layer.kernel[(oc * layer.in_channels + ic) * k + m] * padded[j + m];
                }
            }
            out.push(acc);
        }
    }
    out
}

pub fn naive_forward(model: &CnnModel, window: &[f64]) -> f64 {
    let w = model.config.width;
    let mut x = window.to_vec();
    for layer in &model.layers {
        x = naive_conv(&x, w, layer)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
    }
    model.head.bias
        + model
            .head
            .weights
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum::<f64>()
}

/// A model with every parameter (biases included) drawn from `±scale`.
pub fn random_model(seed: u64, channels: usize, scale: f64) -> CnnModel {
    let mut r = rng(seed);
    let mut m = CnnModel::zeros(CnnConfig { channels, width: 5 });
    let p: Vec<f64> = (0..m.param_count())
        .map(|_| r.random_range(-scale..scale))
        .collect();
    m.set_params(&p).unwrap();
    m
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

/// Central difference of `f` with respect to each coordinate.
pub fn central_diff<F: Fn(&[f64]) -> f64>(f: F, at: &[f64], h: f64) -> Vec<f64> {
    (0..at.len())
        .map(|i| {
            let mut plus = at.to_vec();
            let mut minus = at.to_vec();
            plus[i] += h;
            minus[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

/// Relative error, or absolute error when both sides are below `tiny`.
pub fn grad_error(analytic: f64, numeric: f64, tiny: f64) -> (f64, bool) {
    let mag = analytic.abs().max(numeric.abs());
    if mag < tiny {
        ((analytic - numeric).abs(), true)
    } else {
        ((analytic - numeric).abs() / mag, false)
    }
}

/// Ordinary least-squares line through `(i·τ, y_i)`, evaluated at `n·τ`.
pub fn ols_extrapolate(window: &[f64], tau: f64) -> f64 {
    let n = window.len() as f64;
    let ts: Vec<f64> = (0..window.len()).map(|i| i as f64 * tau).collect();
    let tm = ts.iter().sum::<f64>() / n;
    let ym = window.iter().sum::<f64>() / n;
    let sxy: f64 = ts
        .iter()
        .zip(window)
        .map(|(t, y)| (t - tm) * (y - ym))
        .sum();
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let slope = sxy / sxx;
    ym + slope * (n * tau - tm)
}

/// Adam recurrence for one step on plain vectors.
#[allow(clippy::too_many_arguments)]
pub fn adam_reference(
    theta: &[f64],
    g: &[f64],
    m: &[f64],
    v: &[f64],
    t: u64,
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let t = t + 1;
    let mut th = theta.to_vec();
    let mut m2 = m.to_vec();
    let mut v2 = v.to_vec();
    for i in 0..th.len() {
        m2[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v2[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let mh = m2[i] / (1.0 - b1.powi(t as i32));
        let vh = v2[i] / (1.0 - b2.powi(t as i32));
        th[i] -= lr * mh / (vh.sqrt() + eps);
    }
    (th, m2, v2)
}

/// Eigenvalues of a symmetric 2×2 matrix in closed form.
pub fn sym2_eigen(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - r, mean + r)
}

pub fn dense_head(weights: Vec<f64>, bias: f64) -> DenseHead {
    DenseHead { weights, bias }
}
