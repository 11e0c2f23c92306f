//! Rolling one-step-ahead evaluation.
//!
//! Each prediction sees only the `width` actual values preceding its target;
//! earlier predictions are never fed back.

use std::collections::HashMap;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clock_data::{NormalizationScale, QuadraticTrend, TimeSeries};
use crate::cnn::CnnModel;
use crate::error::{Error, Result};
use crate::kalman::{kf_one_ahead, KalmanParams};
use crate::output::{write_atomic, write_json};
use crate::pipeline::PipelineState;
use crate::training::rmse_loss;

/// Anything that maps a window of recent values to the next value.
pub trait OneStepPredictor {
    fn predict(&self, window: &[f64]) -> Result<f64>;
}

impl OneStepPredictor for CnnModel {
    fn predict(&self, window: &[f64]) -> Result<f64> {
        self.forward(window)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KalmanPredictor {
    pub params: KalmanParams,
    /// Sample spacing in days.
    pub interval: f64,
}

impl OneStepPredictor for KalmanPredictor {
    fn predict(&self, window: &[f64]) -> Result<f64> {
        kf_one_ahead(window, self.interval, &self.params)
    }
}

/// Repeats the last observed value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl OneStepPredictor for Persistence {
    fn predict(&self, window: &[f64]) -> Result<f64> {
        window
            .last()
            .copied()
            .ok_or(Error::Empty("persistence window"))
    }
}

/// Looks up the value that followed each window in a known series. Gives a
/// zero-error reference for exercising the evaluation plumbing.
#[derive(Debug, Clone)]
pub struct Memorizer {
    next: HashMap<Vec<u64>, f64>,
}

impl Memorizer {
    pub fn new(series: &TimeSeries, width: usize) -> Self {
        let mut next = HashMap::new();
        for w in series.values().windows(width + 1) {
            next.entry(key(&w[..width])).or_insert(w[width]);
        }
        Self { next }
    }
}

fn key(window: &[f64]) -> Vec<u64> {
    window.iter().map(|v| v.to_bits()).collect()
}

impl OneStepPredictor for Memorizer {
    fn predict(&self, window: &[f64]) -> Result<f64> {
        self.next
            .get(&key(window))
            .copied()
            .ok_or_else(|| Error::InvalidSeries("window not present in memorized series".into()))
    }
}

/// Target indices in `test_range` that have `width` predecessors.
pub fn eligible_targets(test_range: &Range<usize>, width: usize) -> Range<usize> {
    test_range.start.max(width)..test_range.end.max(width)
}

/// One prediction per eligible target in `test_range`, each from the
/// `width` actual values immediately before it.
pub fn rolling_predict(
    method: &dyn OneStepPredictor,
    series: &TimeSeries,
    test_range: Range<usize>,
    width: usize,
) -> Result<Vec<f64>> {
    if test_range.end > series.len() {
        return Err(Error::InvalidSplit(format!(
            "test range {test_range:?} exceeds {} points",
            series.len()
        )));
    }
    let targets = eligible_targets(&test_range, width);
    if targets.is_empty() {
        return Err(Error::InsufficientData {
            what: "rolling prediction",
            needed: width + 1,
            got: test_range.end,
        });
    }
    let values = series.values();
    targets
        .map(|j| method.predict(&values[j - width..j]))
        .collect()
}

/// `pred_ns = pred_norm · d_max_abs + trend(epoch)`.
pub fn reconstruct(
    preds_norm: &[f64],
    scale: &NormalizationScale,
    trend: &QuadraticTrend,
    epochs: &[i64],
) -> Result<Vec<f64>> {
    if preds_norm.len() != epochs.len() {
        return Err(Error::LengthMismatch {
            expected: epochs.len(),
            got: preds_norm.len(),
        });
    }
    Ok(preds_norm
        .iter()
        .zip(epochs)
        .map(|(p, &e)| p * scale.d_max_abs + trend.eval(e))
        .collect())
}

/// RMS prediction error; the same formula as the training loss.
pub fn e_rms_pred(preds: &[f64], actuals: &[f64]) -> Result<f64> {
    rmse_loss(preds, actuals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mjd: i64,
    pub actual_ns: f64,
    pub cnn_pred_ns: f64,
    pub kf_pred_ns: f64,
    pub cnn_diff_ns: f64,
    pub kf_diff_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub n_pred: usize,
    pub cnn_e_rms_ns: f64,
    pub kf_e_rms_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub rows: Vec<ReportRow>,
    pub summary: ReportSummary,
}

impl PredictionReport {
    pub fn write_csv_to<W: Write + ?Sized>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "mjd,actual_ns,cnn_pred_ns,kf_pred_ns,cnn_diff_ns,kf_diff_ns"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.mjd, r.actual_ns, r.cnn_pred_ns, r.kf_pred_ns, r.cnn_diff_ns, r.kf_diff_ns
            )?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path, force: bool) -> Result<()> {
        write_atomic(path, force, |w| self.write_csv_to(w))
    }

    pub fn write_summary(&self, path: &Path, force: bool) -> Result<()> {
        write_json(path, force, &self.summary)
    }
}

/// Runs both predictors over identical windows, maps predictions back to
/// nanoseconds and scores them against the original series.
pub fn compare_with(
    cnn: &dyn OneStepPredictor,
    kf: &dyn OneStepPredictor,
    state: &PipelineState,
    test_range: Range<usize>,
    width: usize,
) -> Result<PredictionReport> {
    let targets = eligible_targets(&test_range, width);
    let cnn_norm = rolling_predict(cnn, &state.normalized, test_range.clone(), width)?;
    let kf_norm = rolling_predict(kf, &state.normalized, test_range, width)?;

    let epochs: Vec<i64> = targets.clone().map(|j| state.series.epoch(j)).collect();
    let cnn_ns = reconstruct(&cnn_norm, &state.scale, &state.trend, &epochs)?;
    let kf_ns = reconstruct(&kf_norm, &state.scale, &state.trend, &epochs)?;
    let actual = &state.series.values()[targets];

    let rows: Vec<ReportRow> = epochs
        .iter()
        .zip(actual)
        .zip(cnn_ns.iter().zip(&kf_ns))
        .map(
            |((&mjd, &actual_ns), (&cnn_pred_ns, &kf_pred_ns))| ReportRow {
                mjd,
                actual_ns,
                cnn_pred_ns,
                kf_pred_ns,
                cnn_diff_ns: cnn_pred_ns - actual_ns,
                kf_diff_ns: kf_pred_ns - actual_ns,
            },
        )
        .collect();

    let summary = ReportSummary {
        n_pred: rows.len(),
        cnn_e_rms_ns: e_rms_pred(&cnn_ns, actual)?,
        kf_e_rms_ns: e_rms_pred(&kf_ns, actual)?,
    };
    Ok(PredictionReport { rows, summary })
}

pub fn compare(
    cnn: &CnnModel,
    kf_params: &KalmanParams,
    state: &PipelineState,
    test_range: Range<usize>,
) -> Result<PredictionReport> {
    let kf = KalmanPredictor {
        params: *kf_params,
        interval: state.series.interval() as f64,
    };
    compare_with(cnn, &kf, state, test_range, cnn.config.width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{prepare, PrepareConfig};

    fn wavy(n: usize) -> TimeSeries {
        let values = (0..n)
            .map(|i| {
                let t = 5.0 * i as f64;
                -20.0 + 0.3 * t - 0.0004 * t * t + 40.0 * (i as f64 * 0.21).sin()
            })
            .collect();
        TimeSeries::new(56934, 5, values).unwrap()
    }

    #[test]
    fn memorizer_gives_zero_error() {
        let s = wavy(60);
        let m = Memorizer::new(&s, 5);
        let preds = rolling_predict(&m, &s, 40..60, 5).unwrap();
        assert_eq!(preds, &s.values()[40..60]);
    }

    #[test]
    fn persistence_on_constant_series() {
        let s = TimeSeries::new(0, 5, vec![3.5; 30]).unwrap();
        let preds = rolling_predict(&Persistence, &s, 10..30, 5).unwrap();
        assert_eq!(e_rms_pred(&preds, &s.values()[10..30]).unwrap(), 0.0);
    }

    #[test]
    fn early_targets_without_history_are_skipped() {
        let s = wavy(20);
        assert_eq!(
            rolling_predict(&Persistence, &s, 0..20, 5).unwrap().len(),
            15
        );
        assert!(rolling_predict(&Persistence, &s, 0..5, 5).is_err());
        assert!(rolling_predict(&Persistence, &s, 10..25, 5).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let tr = QuadraticTrend {
            t0: 100,
            c0: 1.0,
            c1: 0.5,
            c2: 0.01,
        };
        let sc = NormalizationScale { d_max_abs: 40.0 };
        let epochs = [100, 105, 110];
        let pure = reconstruct(&[0.0; 3], &sc, &tr, &epochs).unwrap();
        assert_eq!(pure, epochs.iter().map(|&e| tr.eval(e)).collect::<Vec<_>>());

        let id = reconstruct(
            &[1.5, -2.0, 0.25],
            &NormalizationScale { d_max_abs: 1.0 },
            &QuadraticTrend::ZERO,
            &epochs,
        )
        .unwrap();
        assert_eq!(id, vec![1.5, -2.0, 0.25]);
        assert!(reconstruct(&[0.0; 2], &sc, &tr, &epochs).is_err());
    }

    #[test]
    fn e_rms_examples() {
        assert_eq!(e_rms_pred(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(e_rms_pred(&[5.0], &[2.0]).unwrap(), 3.0);
        assert!(e_rms_pred(&[], &[]).is_err());
        assert!(e_rms_pred(&[1.0], &[]).is_err());
    }

    #[test]
    fn memorizer_compare_reports_zero() {
        let state = prepare(&wavy(274), &PrepareConfig::default()).unwrap();
        let m = Memorizer::new(&state.normalized, 5);
        let report = compare_with(&m, &m, &state, state.split.test.clone(), 5).unwrap();
        assert_eq!(report.summary.n_pred, 100);
        assert!(report.summary.cnn_e_rms_ns < 1e-9);
        assert!(report.summary.kf_e_rms_ns < 1e-9);
        for r in &report.rows {
            assert_eq!(r.cnn_diff_ns, r.cnn_pred_ns - r.actual_ns);
            assert_eq!(r.kf_diff_ns, r.kf_pred_ns - r.actual_ns);
        }
    }
}
