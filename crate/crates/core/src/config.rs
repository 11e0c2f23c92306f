//! Flat `key = value` run configuration. Every key is optional.
//!
//! ```text
//! # training
//! max_updates = 500
//! l2_lambda = 1e-4
//! patience = 20        # or `inf`
//! kf_q1 = 1e-6
//! ```

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cnn::CnnConfig;
use crate::error::{Error, Result};
use crate::kalman::KalmanParams;
use crate::pipeline::PrepareConfig;
use crate::synthetic::SyntheticClockSpec;
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub synthetic: SyntheticClockSpec,
    pub prepare: PrepareConfig,
    pub cnn: CnnConfig,
    pub train: TrainConfig,
    pub kalman: KalmanParams,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Parses overrides on top of the defaults. Errors carry a 1-based line.
    pub fn parse(text: &str) -> Result<Self, (u64, String)> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| (line_no, format!("expected `key = value`, found `{line}`")))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|m| (line_no, m))?;
        }
        cfg.validate().map_err(|e| (0, e.to_string()))?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        let s = &mut self.synthetic;
        let t = &mut self.train;
        match key {
            "start_mjd" => s.start_mjd = num(key, value)?,
            "x0" => s.x0 = num(key, value)?,
            "y0" => s.y0 = num(key, value)?,
            "drift" => s.drift = num(key, value)?,
            "sigma_wfm" => s.sigma_wfm = num(key, value)?,
            "sigma_rwfm" => s.sigma_rwfm = num(key, value)?,
            "n" => s.n = num(key, value)?,
            "interval" => s.interval = num(key, value)?,
            "synthetic_seed" => s.seed = num(key, value)?,

            "train_frac" => self.prepare.train_frac = num(key, value)?,
            "val_frac" => self.prepare.val_frac = num(key, value)?,
            "fit_scope" => self.prepare.fit_scope = value.parse()?,

            "channels" => self.cnn.channels = num(key, value)?,
            "width" => self.cnn.width = num(key, value)?,

            "seed" => t.seed = num(key, value)?,
            "max_updates" => t.max_updates = num(key, value)?,
            "l2_lambda" => t.l2_lambda = num(key, value)?,
            "patience" => {
                t.patience = match value {
                    "inf" | "none" => usize::MAX,
                    _ => num(key, value)?,
                }
            }
            "lr" => t.adam.lr = num(key, value)?,
            "beta1" => t.adam.beta1 = num(key, value)?,
            "beta2" => t.adam.beta2 = num(key, value)?,
            "eps" => t.adam.eps = num(key, value)?,

            "kf_q1" => self.kalman.q1 = num(key, value)?,
            "kf_q2" => self.kalman.q2 = num(key, value)?,
            "kf_r" => self.kalman.r = num(key, value)?,

            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.synthetic.validate()?;
        self.train.validate()?;
        self.kalman.validate()?;
        if self.cnn.channels == 0 || self.cnn.width == 0 {
            return Err(Error::Config("channels and width must be positive".into()));
        }
        Ok(())
    }
}
