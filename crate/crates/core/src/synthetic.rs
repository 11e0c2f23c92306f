//! Surrogate `[UTC - HM]` series: a quadratic deterministic part plus
//! white-FM and random-walk-FM clock noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clock_data::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClockSpec {
    /// MJD of the first point.
    pub start_mjd: i64,
    /// Initial phase, ns.
    pub x0: f64,
    /// Frequency offset, ns/day.
    pub y0: f64,
    /// Frequency drift, ns/day².
    pub drift: f64,
    /// Standard deviation of the white-FM phase increment per step, ns.
    pub sigma_wfm: f64,
    /// Standard deviation of the random-walk-FM frequency increment per
    /// step, expressed as ns of phase per step.
    pub sigma_rwfm: f64,
    pub n: usize,
    /// Days between points.
    pub interval: i64,
    pub seed: u64,
}

/// Frozen spec for the reference experiment: 274 points at 5-day spacing
/// starting MJD 56934, with a detrended residual of roughly ±100 ns.
pub fn default_maser_spec() -> SyntheticClockSpec {
    SyntheticClockSpec {
        start_mjd: 56934,
        x0: -120.0,
        y0: 1.8,
        drift: -2.0e-3,
        sigma_wfm: 0.8,
        sigma_rwfm: 1.0,
        n: 274,
        interval: 5,
        seed: 7,
    }
}

impl Default for SyntheticClockSpec {
    fn default() -> Self {
        default_maser_spec()
    }
}

impl SyntheticClockSpec {
    pub fn validate(&self) -> Result<()> {
        let amp = |x: f64| x.is_finite() && x >= 0.0;
        if self.n < 7 {
            return Err(Error::Config(format!(
                "n must be at least 7, got {}",
                self.n
            )));
        }
        if self.interval <= 0 {
            return Err(Error::Config(format!(
                "interval must be positive, got {}",
                self.interval
            )));
        }
        if !amp(self.sigma_wfm) || !amp(self.sigma_rwfm) {
            return Err(Error::Config(
                "noise amplitudes must be finite and non-negative".into(),
            ));
        }
        if ![self.x0, self.y0, self.drift].iter().all(|c| c.is_finite()) {
            return Err(Error::Config("trend coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// `x0 + y0·t + ½·d·t² + Σ wfm + ΣΣ rwfm`, with `t` in days since the first
/// point. Two standard normals are drawn per step (white-FM first) from a
/// ChaCha8 stream seeded by `spec.seed`.
pub fn generate(spec: &SyntheticClockSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut wfm_phase = 0.0;
    let mut rw_freq = 0.0;
    let mut rw_phase = 0.0;
    let mut values = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        if i > 0 {
            let e: f64 = StandardNormal.sample(&mut rng);
            let h: f64 = StandardNormal.sample(&mut rng);
            wfm_phase += spec.sigma_wfm * e;
            rw_freq += spec.sigma_rwfm * h;
            rw_phase += rw_freq;
        }
        let t = (i as i64 * spec.interval) as f64;
        values.push(spec.x0 + spec.y0 * t + 0.5 * spec.drift * t * t + wfm_phase + rw_phase);
    }
    TimeSeries::new(spec.start_mjd, spec.interval, values)
}
