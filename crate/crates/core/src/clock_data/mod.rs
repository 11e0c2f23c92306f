//! Clock time-difference series and the invertible preprocessing applied to
//! them before prediction: quadratic detrending, peak normalization and the
//! contiguous train/validation/test split.

mod io;

use std::ops::Range;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_series, read_series_from, write_series, write_series_to};

/// Circular-T reporting cadence.
pub const DEFAULT_INTERVAL_DAYS: i64 = 5;

/// A uniformly spaced series of offsets in nanoseconds, stamped with integer
/// MJD epochs.
///
/// Epochs are stored implicitly as `start + i * interval`, so the spacing
/// invariant holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    start: i64,
    interval: i64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: i64, interval: i64, values: Vec<f64>) -> Result<Self> {
        if interval <= 0 {
            return Err(Error::InvalidSeries(format!(
                "interval must be positive, got {interval}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("series is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at MJD {}",
                start + i as i64 * interval
            )));
        }
        Ok(Self {
            start,
            interval,
            values,
        })
    }

    /// Builds a series from explicit epochs, checking monotonicity and spacing.
    pub fn from_epochs(epochs: &[i64], values: Vec<f64>, interval: i64) -> Result<Self> {
        if epochs.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: epochs.len(),
                got: values.len(),
            });
        }
        let Some(&start) = epochs.first() else {
            return Err(Error::InvalidSeries("series is empty".into()));
        };
        for w in epochs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidSeries(format!(
                    "epochs not strictly increasing at MJD {}",
                    w[1]
                )));
            }
            if w[1] - w[0] != interval {
                return Err(Error::InvalidSeries(format!(
                    "spacing {} days between MJD {} and {} (expected {interval})",
                    w[1] - w[0],
                    w[0],
                    w[1]
                )));
            }
        }
        Self::new(start, interval, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn interval(&self) -> i64 {
        self.interval
    }

    pub fn epoch(&self, i: usize) -> i64 {
        self.start + i as i64 * self.interval
    }

    pub fn epochs(&self) -> impl ExactSizeIterator<Item = i64> + '_ {
        (0..self.len()).map(|i| self.epoch(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same epochs, new values.
    fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            start: self.start,
            interval: self.interval,
            values,
        }
    }

    /// Contiguous sub-series over an index range.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {range:?} out of bounds for {} points",
                self.len()
            )));
        }
        Ok(Self {
            start: self.epoch(range.start),
            interval: self.interval,
            values: self.values[range].to_vec(),
        })
    }
}

/// Pointwise sum of two aligned series, e.g. `[UTC - UTC(k)] + [UTC(k) - HM]`.
pub fn combine_series(a: &TimeSeries, b: &TimeSeries) -> Result<TimeSeries> {
    let mismatch = a
        .epochs()
        .zip(b.epochs())
        .find(|(ea, eb)| ea != eb)
        .map(|(ea, eb)| ea.min(eb));
    if let Some(epoch) = mismatch {
        return Err(Error::Alignment { epoch });
    }
    if a.len() != b.len() || a.interval != b.interval {
        let n = a.len().min(b.len());
        let epoch = if a.interval != b.interval {
            a.epoch(1.min(n.saturating_sub(1)))
        } else if a.len() > n {
            a.epoch(n)
        } else {
            b.epoch(n)
        };
        return Err(Error::Alignment { epoch });
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
    Ok(a.with_values(values))
}

/// `c0 + c1·(t - t0) + c2·(t - t0)²`, with `t` in MJD days and values in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTrend {
    pub t0: i64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl QuadraticTrend {
    pub const ZERO: QuadraticTrend = QuadraticTrend {
        t0: 0,
        c0: 0.0,
        c1: 0.0,
        c2: 0.0,
    };

    pub fn eval(&self, epoch: i64) -> f64 {
        let dt = (epoch - self.t0) as f64;
        self.c0 + dt * (self.c1 + dt * self.c2)
    }
}

/// Least-squares quadratic through the series.
///
/// The abscissa is shifted to the first epoch and scaled by the span so the
/// normal matrix stays well conditioned at MJD magnitudes.
pub fn fit_quadratic(s: &TimeSeries) -> Result<QuadraticTrend> {
    let n = s.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            what: "quadratic fit",
            needed: 3,
            got: n,
        });
    }
    let t0 = s.start;
    let span = ((n - 1) as i64 * s.interval) as f64;

    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (epoch, &y) in s.epochs().zip(&s.values) {
        let u = (epoch - t0) as f64 / span;
        let row = Vector3::new(1.0, u, u * u);
        ata += row * row.transpose();
        aty += row * y;
    }
    let coef = ata
        .cholesky()
        .map(|c| c.solve(&aty))
        .ok_or_else(|| Error::InvalidSeries("singular quadratic design".into()))?;

    Ok(QuadraticTrend {
        t0,
        c0: coef[0],
        c1: coef[1] / span,
        c2: coef[2] / (span * span),
    })
}

pub fn detrend(s: &TimeSeries, trend: &QuadraticTrend) -> TimeSeries {
    let values = s
        .epochs()
        .zip(&s.values)
        .map(|(e, v)| v - trend.eval(e))
        .collect();
    s.with_values(values)
}

pub fn retrend(s: &TimeSeries, trend: &QuadraticTrend) -> TimeSeries {
    let values = s
        .epochs()
        .zip(&s.values)
        .map(|(e, v)| v + trend.eval(e))
        .collect();
    s.with_values(values)
}

/// Peak absolute value used to bring a series into `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationScale {
    pub d_max_abs: f64,
}

impl NormalizationScale {
    pub fn fit(values: &[f64]) -> Result<Self> {
        let d_max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if d_max_abs > 0.0 && d_max_abs.is_finite() {
            Ok(Self { d_max_abs })
        } else {
            Err(Error::DegenerateScale)
        }
    }

    pub fn apply(&self, s: &TimeSeries) -> TimeSeries {
        s.with_values(s.values.iter().map(|v| v / self.d_max_abs).collect())
    }
}

pub fn normalize(s: &TimeSeries) -> Result<(TimeSeries, NormalizationScale)> {
    let scale = NormalizationScale::fit(&s.values)?;
    Ok((scale.apply(s), scale))
}

pub fn denormalize(s: &TimeSeries, scale: &NormalizationScale) -> TimeSeries {
    s.with_values(s.values.iter().map(|v| v * scale.d_max_abs).collect())
}

/// Contiguous prefix split into training, validation and test partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl DataSplit {
    pub fn from_counts(n: usize, train: usize, val: usize) -> Result<Self> {
        if train == 0 || val == 0 || train + val >= n {
            return Err(Error::InvalidSplit(format!(
                "partitions of {n} points into train {train}, val {val}, test {} must all be nonempty",
                n.saturating_sub(train + val)
            )));
        }
        Ok(Self {
            train: 0..train,
            val: train..train + val,
            test: train + val..n,
        })
    }

    pub fn len(&self) -> usize {
        self.test.end
    }

    pub fn is_empty(&self) -> bool {
        self.test.end == 0
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Train size `floor(train_frac·n)`, validation size `floor(val_frac·n)`,
/// test takes the remainder. Every partition must be nonempty.
pub fn split(n: usize, train_frac: f64, val_frac: f64) -> Result<DataSplit> {
    let valid = |f: f64| f.is_finite() && f > 0.0;
    if !valid(train_frac) || !valid(val_frac) || train_frac + val_frac >= 1.0 {
        return Err(Error::InvalidSplit(format!(
            "fractions ({train_frac}, {val_frac}) must be positive with sum below 1"
        )));
    }
    let train = (train_frac * n as f64).floor() as usize;
    let val = (val_frac * n as f64).floor() as usize;
    DataSplit::from_counts(n, train, val)
}
