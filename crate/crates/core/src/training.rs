//! Full-batch training of [`CnnModel`] on sliding windows with an RMSE loss,
//! an L2 weight penalty, Adam updates and early stopping.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clock_data::TimeSeries;
use crate::cnn::CnnModel;
use crate::error::{Error, Result};
use crate::output::write_atomic;

/// `(window, next value)` pairs drawn from one contiguous range of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub source_range: Range<usize>,
}

impl WindowDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Every pair whose window and target both lie inside `range`; yields
/// `range.len() - width` pairs.
pub fn make_windows(
    series: &TimeSeries,
    range: Range<usize>,
    width: usize,
) -> Result<WindowDataset> {
    if range.end > series.len() || range.start > range.end {
        return Err(Error::InvalidSplit(format!(
            "range {range:?} out of bounds for {} points",
            series.len()
        )));
    }
    if range.len() < width + 1 {
        return Err(Error::InsufficientData {
            what: "window dataset",
            needed: width + 1,
            got: range.len(),
        });
    }
    let values = &series.values()[range.clone()];
    let (inputs, targets) = values
        .windows(width + 1)
        .map(|w| (w[..width].to_vec(), w[width]))
        .unzip();
    Ok(WindowDataset {
        inputs,
        targets,
        source_range: range,
    })
}

/// One pair per target index in `targets`, with windows allowed to reach
/// back before the range. Partition membership is decided by the target.
pub fn make_target_windows(
    series: &TimeSeries,
    targets: Range<usize>,
    width: usize,
) -> Result<WindowDataset> {
    let start = targets
        .start
        .checked_sub(width)
        .ok_or(Error::InsufficientData {
            what: "target windows (history before first target)",
            needed: width,
            got: targets.start,
        })?;
    make_windows(series, start..targets.end, width)
}

/// Root-mean-square difference, `sqrt(Σ(pred - target)² / n)`.
pub fn rmse_loss(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: targets.len(),
            got: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty("rmse"));
    }
    let sum_sq: f64 = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sum_sq / preds.len() as f64).sqrt())
}

/// `λ · Σ w²` over kernel and head weights; biases are not penalized.
pub fn l2_penalty(model: &CnnModel, l2_lambda: f64) -> f64 {
    model
        .params()
        .iter()
        .zip(model.weight_mask())
        .filter(|(_, is_weight)| *is_weight)
        .map(|(w, _)| w * w)
        .sum::<f64>()
        * l2_lambda
}

pub fn loss_with_l2(
    preds: &[f64],
    targets: &[f64],
    model: &CnnModel,
    l2_lambda: f64,
) -> Result<f64> {
    Ok(rmse_loss(preds, targets)? + l2_penalty(model, l2_lambda))
}

pub fn predict_all(model: &CnnModel, ds: &WindowDataset) -> Result<Vec<f64>> {
    ds.inputs.iter().map(|w| model.forward(w)).collect()
}

pub fn dataset_rmse(model: &CnnModel, ds: &WindowDataset) -> Result<f64> {
    rmse_loss(&predict_all(model, ds)?, &ds.targets)
}

/// Value and full-batch gradient of [`loss_with_l2`] over `ds`.
///
/// At an exact fit (RMSE = 0) the RMSE term contributes a zero gradient.
pub fn loss_and_gradient(
    model: &CnnModel,
    ds: &WindowDataset,
    l2_lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    if ds.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    let preds = predict_all(model, ds)?;
    let rmse = rmse_loss(&preds, &ds.targets)?;

    let mut grad = vec![0.0; model.param_count()];
    if rmse > 0.0 {
        let scale = 1.0 / (ds.len() as f64 * rmse);
        for ((window, p), t) in ds.inputs.iter().zip(&preds).zip(&ds.targets) {
            let g = model.backward(window, (p - t) * scale)?;
            for (acc, gi) in grad.iter_mut().zip(g.as_slice()) {
                *acc += gi;
            }
        }
    }
    let params = model.params();
    for ((g, w), is_weight) in grad.iter_mut().zip(&params).zip(model.weight_mask()) {
        if is_weight {
            *g += 2.0 * l2_lambda * w;
        }
    }
    Ok((rmse + l2_penalty(model, l2_lambda), grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub hyper: AdamConfig,
}

impl AdamState {
    pub fn new(n_params: usize, hyper: AdamConfig) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            hyper,
        }
    }

    /// One bias-corrected Adam update applied in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Pure form of [`AdamState::step`].
pub fn adam_step(
    params: &[f64],
    grads: &[f64],
    state: &AdamState,
) -> Result<(Vec<f64>, AdamState)> {
    let mut params = params.to_vec();
    let mut state = state.clone();
    state.step(&mut params, grads)?;
    Ok((params, state))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_updates: usize,
    pub l2_lambda: f64,
    /// Consecutive non-improving validation evaluations tolerated;
    /// `usize::MAX` disables early stopping.
    pub patience: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_updates: 500,
            l2_lambda: 1e-4,
            patience: 20,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.adam;
        if self.max_updates == 0 {
            return Err(Error::Config("max_updates must be at least 1".into()));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::Config(
                "l2_lambda must be finite and non-negative".into(),
            ));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !(positive(lr) && unit(beta1) && unit(beta2) && positive(eps)) {
            return Err(Error::Config("invalid Adam hyperparameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxUpdates,
    EarlyStop,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::MaxUpdates => "max-updates",
            StopReason::EarlyStop => "early-stop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based update number.
    pub update: usize,
    pub train_rmse: f64,
    pub val_rmse: f64,
}

/// Training and validation RMSE after every weight update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub initial_train_rmse: f64,
    pub initial_val_rmse: f64,
    pub records: Vec<TraceRecord>,
    pub stop_reason: StopReason,
    /// Index into `records` of the minimal validation RMSE.
    pub best_update: usize,
}

impl TrainingTrace {
    pub fn best(&self) -> &TraceRecord {
        &self.records[self.best_update]
    }

    pub fn write_csv_to<W: Write + ?Sized>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "update,train_rmse,val_rmse")?;
        for r in &self.records {
            writeln!(w, "{},{},{}", r.update, r.train_rmse, r.val_rmse)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path, force: bool) -> Result<()> {
        write_atomic(path, force, |w| self.write_csv_to(w))
    }
}

/// Trains from `model` and returns the snapshot with the lowest validation
/// RMSE together with the trace.
pub fn train(
    model: &CnnModel,
    train_ds: &WindowDataset,
    val_ds: &WindowDataset,
    cfg: &TrainConfig,
) -> Result<(CnnModel, TrainingTrace)> {
    cfg.validate()?;
    if train_ds.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    if val_ds.is_empty() {
        return Err(Error::Empty("validation dataset"));
    }

    let mut current = model.clone();
    let mut params = current.params();
    let mut adam = AdamState::new(params.len(), cfg.adam);

    let initial_train_rmse = dataset_rmse(&current, train_ds)?;
    let initial_val_rmse = dataset_rmse(&current, val_ds)?;

    let mut records = Vec::new();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut since_best = 0usize;
    let mut stop_reason = StopReason::MaxUpdates;

    for update in 1..=cfg.max_updates {
        let (_, grad) = loss_and_gradient(&current, train_ds, cfg.l2_lambda)?;
        adam.step(&mut params, &grad)?;
        current.set_params(&params)?;
        if !params.iter().all(|p| p.is_finite()) {
            return Err(Error::Config(format!(
                "training diverged at update {update}"
            )));
        }

        let train_rmse = dataset_rmse(&current, train_ds)?;
        let val_rmse = dataset_rmse(&current, val_ds)?;
        records.push(TraceRecord {
            update,
            train_rmse,
            val_rmse,
        });

        match &best {
            Some((_, best_val, _)) if val_rmse >= *best_val => {
                since_best += 1;
                if since_best >= cfg.patience {
                    stop_reason = StopReason::EarlyStop;
                    break;
                }
            }
            _ => {
                best = Some((records.len() - 1, val_rmse, params.clone()));
                since_best = 0;
            }
        }
    }

    let (best_update, _, best_params) = best.expect("at least one update is always recorded");
    let mut best_model = model.clone();
    best_model.set_params(&best_params)?;
    Ok((
        best_model,
        TrainingTrace {
            initial_train_rmse,
            initial_val_rmse,
            records,
            stop_reason,
            best_update,
        },
    ))
}
