//! Two-state (phase, frequency) clock model used as the linear baseline.
//!
//! Phase is in the units of the measurements and frequency in those units per
//! day. The process noise follows the usual white-FM / random-walk-FM
//! integrals over one step `τ`:
//!
//! ```text
//! Q(τ) = [ q1·τ + q2·τ³/3   q2·τ²/2 ]
//!        [ q2·τ²/2          q2·τ    ]
//! ```

use std::ops::Range;

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};

use crate::clock_data::TimeSeries;
use crate::error::{Error, Result};
use crate::training::rmse_loss;

/// Diffuse prior variance on both states.
pub const DIFFUSE_VARIANCE: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanParams {
    /// White-FM spectral density.
    pub q1: f64,
    /// Random-walk-FM spectral density.
    pub q2: f64,
    /// Measurement noise variance.
    pub r: f64,
}

impl Default for KalmanParams {
    /// Values selected by [`grid_search`] (half-decade grid, `r` fixed) on
    /// the validation partition of the default synthetic experiment, in
    /// normalized units. See `examples/tune_kalman.rs`.
    fn default() -> Self {
        Self {
            q1: 1e-3,
            q2: 3.162_277_660_168_379_4e-4,
            r: 1e-4,
        }
    }
}

impl KalmanParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if ok(self.q1) && ok(self.q2) && ok(self.r) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "Kalman parameters must be finite and non-negative: {self:?}"
            )))
        }
    }
}

pub fn process_noise(q1: f64, q2: f64, tau: f64) -> Matrix2<f64> {
    Matrix2::new(
        q1 * tau + q2 * tau.powi(3) / 3.0,
        q2 * tau * tau / 2.0,
        q2 * tau * tau / 2.0,
        q2 * tau,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanModel {
    pub state: Vector2<f64>,
    pub p: Matrix2<f64>,
    pub f: Matrix2<f64>,
    pub q: Matrix2<f64>,
    pub r: f64,
}

const H: RowVector2<f64> = RowVector2::new(1.0, 0.0);

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

impl KalmanModel {
    pub fn new(state: Vector2<f64>, p: Matrix2<f64>, tau: f64, params: &KalmanParams) -> Self {
        Self {
            state,
            p,
            f: Matrix2::new(1.0, tau, 0.0, 1.0),
            q: process_noise(params.q1, params.q2, tau),
            r: params.r,
        }
    }

    pub fn phase(&self) -> f64 {
        self.state[0]
    }

    pub fn frequency(&self) -> f64 {
        self.state[1]
    }

    /// Propagates one interval.
    pub fn predict(&self) -> Self {
        Self {
            state: self.f * self.state,
            p: symmetrize(self.f * self.p * self.f.transpose() + self.q),
            ..self.clone()
        }
    }

    /// Conditions on a phase measurement `z`.
    pub fn update(&self, z: f64) -> Result<Self> {
        let s = (H * self.p * H.transpose())[0] + self.r;
        if s.is_nan() || s <= 0.0 {
            return Err(Error::DegenerateUpdate(s));
        }
        let k = self.p * H.transpose() / s;
        let innovation = z - (H * self.state)[0];
        Ok(Self {
            state: self.state + k * innovation,
            p: symmetrize((Matrix2::identity() - k * H) * self.p),
            ..self.clone()
        })
    }
}

pub fn kf_predict(kf: &KalmanModel) -> KalmanModel {
    kf.predict()
}

pub fn kf_update(kf: &KalmanModel, z: f64) -> Result<KalmanModel> {
    kf.update(z)
}

/// Filters a window of equally spaced measurements and returns the phase
/// predicted one interval past the last one.
///
/// The state starts at the first point with the first difference as
/// frequency, under a diffuse covariance.
pub fn kf_one_ahead(window: &[f64], interval: f64, params: &KalmanParams) -> Result<f64> {
    if window.len() < 2 {
        return Err(Error::InsufficientData {
            what: "Kalman window",
            needed: 2,
            got: window.len(),
        });
    }
    let init = Vector2::new(window[0], (window[1] - window[0]) / interval);
    let p0 = Matrix2::from_diagonal_element(DIFFUSE_VARIANCE);
    let mut kf = KalmanModel::new(init, p0, interval, params).update(window[0])?;
    for &z in &window[1..] {
        kf = kf.predict().update(z)?;
    }
    Ok(kf.predict().phase())
}

/// Coarse search over `(q1, q2)` at fixed `r`, scoring one-ahead RMSE on
/// the targets in `targets` (windows may reach back before the range).
pub fn grid_search(
    series: &TimeSeries,
    targets: Range<usize>,
    width: usize,
    q1_grid: &[f64],
    q2_grid: &[f64],
    r: f64,
) -> Result<(KalmanParams, f64)> {
    if targets.start < width || targets.end > series.len() || targets.is_empty() {
        return Err(Error::InvalidSplit(format!(
            "target range {targets:?} unusable with width {width}"
        )));
    }
    let tau = series.interval() as f64;
    let values = series.values();
    let actual = &values[targets.clone()];
    let mut best: Option<(KalmanParams, f64)> = None;
    for &q1 in q1_grid {
        for &q2 in q2_grid {
            let params = KalmanParams { q1, q2, r };
            let preds = targets
                .clone()
                .map(|j| kf_one_ahead(&values[j - width..j], tau, &params))
                .collect::<Result<Vec<_>>>()?;
            let score = rmse_loss(&preds, actual)?;
            if best.as_ref().is_none_or(|(_, b)| score < *b) {
                best = Some((params, score));
            }
        }
    }
    best.ok_or(Error::Empty("Kalman parameter grid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless() -> KalmanParams {
        KalmanParams {
            q1: 0.0,
            q2: 0.0,
            r: 1.0,
        }
    }

    #[test]
    fn predict_deterministic_ramp() {
        let kf = KalmanModel::new(
            Vector2::new(10.0, 2.0),
            Matrix2::identity(),
            5.0,
            &noiseless(),
        );
        let next = kf_predict(&kf);
        assert_eq!(next.state, Vector2::new(20.0, 2.0));
        let expected_p = kf.f * kf.p * kf.f.transpose();
        assert_eq!(next.p, expected_p);

        let zero = KalmanModel::new(
            Vector2::zeros(),
            Matrix2::new(2.0, 0.5, 0.5, 1.0),
            5.0,
            &noiseless(),
        );
        let next = zero.predict();
        assert_eq!(next.state, Vector2::zeros());
        assert_eq!(next.p, zero.f * zero.p * zero.f.transpose());
    }

    #[test]
    fn huge_r_leaves_state_alone() {
        let params = KalmanParams {
            r: 1e18,
            ..noiseless()
        };
        let kf = KalmanModel::new(Vector2::new(3.0, 0.1), Matrix2::identity(), 5.0, &params);
        let up = kf_update(&kf, 1000.0).unwrap();
        assert!((up.phase() - 3.0).abs() < 1e-12);
        assert!((up.frequency() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_r_snaps_to_measurement() {
        let params = KalmanParams {
            r: 0.0,
            ..noiseless()
        };
        let kf = KalmanModel::new(
            Vector2::new(3.0, 0.1),
            Matrix2::new(2.0, 0.3, 0.3, 1.0),
            5.0,
            &params,
        );
        let up = kf.update(-7.5).unwrap();
        assert!((up.phase() + 7.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_update_is_an_error() {
        let params = KalmanParams {
            r: 0.0,
            ..noiseless()
        };
        let kf = KalmanModel::new(Vector2::zeros(), Matrix2::zeros(), 5.0, &params);
        assert!(matches!(kf.update(1.0), Err(Error::DegenerateUpdate(_))));
    }

    #[test]
    fn ramp_frequency_recovered() {
        let slope = 0.37;
        let params = KalmanParams {
            r: 1e-6,
            ..noiseless()
        };
        let mut kf = KalmanModel::new(
            Vector2::zeros(),
            Matrix2::from_diagonal_element(DIFFUSE_VARIANCE),
            5.0,
            &params,
        )
        .update(2.0)
        .unwrap();
        for i in 1..5 {
            kf = kf.predict().update(2.0 + slope * 5.0 * i as f64).unwrap();
        }
        assert!((kf.frequency() - slope).abs() < 1e-9, "{}", kf.frequency());
    }

    #[test]
    fn one_ahead_ramp_and_constant() {
        let tight = KalmanParams {
            q1: 0.0,
            q2: 0.0,
            r: 1e-12,
        };
        let p = kf_one_ahead(&[0.0, 1.0, 2.0, 3.0, 4.0], 5.0, &tight).unwrap();
        assert!((p - 5.0).abs() < 1e-9, "{p}");
        for params in [tight, KalmanParams::default()] {
            let p = kf_one_ahead(&[0.42; 5], 5.0, &params).unwrap();
            assert!((p - 0.42).abs() < 1e-9, "{p}");
        }
    }

    #[test]
    fn process_noise_is_symmetric_psd() {
        let q = process_noise(0.3, 0.02, 5.0);
        assert_eq!(q[(0, 1)], q[(1, 0)]);
        assert!(q[(0, 0)] >= 0.0 && q.determinant() >= 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(KalmanParams::default().validate().is_ok());
        assert!(KalmanParams {
            r: -1.0,
            ..KalmanParams::default()
        }
        .validate()
        .is_err());
        assert!(KalmanParams {
            q1: f64::NAN,
            ..KalmanParams::default()
        }
        .validate()
        .is_err());
    }
}
