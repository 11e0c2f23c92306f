//! Forward preprocessing chain: detrend, normalize, split.

use serde::{Deserialize, Serialize};

use crate::clock_data::{
    denormalize, detrend, fit_quadratic, retrend, split, DataSplit, NormalizationScale,
    QuadraticTrend, TimeSeries,
};
use crate::error::Result;

/// Which points the quadratic trend and normalization scale are fit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitScope {
    /// Training partition only; test data never influences preprocessing.
    /// The quadratic is then extrapolated across validation and test.
    TrainingPrefix,
    /// Every point. Keeps the residual of the whole series on one scale.
    #[default]
    FullSeries,
}

impl std::str::FromStr for FitScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "training-prefix" | "train" => Ok(FitScope::TrainingPrefix),
            "full-series" | "full" => Ok(FitScope::FullSeries),
            other => Err(format!(
                "unknown fit scope `{other}` (training-prefix | full-series)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepareConfig {
    pub train_frac: f64,
    pub val_frac: f64,
    pub fit_scope: FitScope,
}

impl Default for PrepareConfig {
    /// 141 / 33 / 100 on 274 points under the floor rule.
    fn default() -> Self {
        Self {
            train_frac: 0.5146,
            val_frac: 0.1205,
            fit_scope: FitScope::FullSeries,
        }
    }
}

/// Everything needed to move between nanoseconds and normalized residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub series: TimeSeries,
    pub trend: QuadraticTrend,
    pub scale: NormalizationScale,
    pub split: DataSplit,
    pub fit_scope: FitScope,
    pub normalized: TimeSeries,
}

impl PipelineState {
    pub fn residual(&self) -> TimeSeries {
        detrend(&self.series, &self.trend)
    }

    /// Back to nanoseconds: denormalize then add the trend.
    pub fn reassemble(&self, normalized: &TimeSeries) -> TimeSeries {
        retrend(&denormalize(normalized, &self.scale), &self.trend)
    }
}

pub fn prepare(series: &TimeSeries, cfg: &PrepareConfig) -> Result<PipelineState> {
    let data_split = split(series.len(), cfg.train_frac, cfg.val_frac)?;
    let fit_on = match cfg.fit_scope {
        FitScope::TrainingPrefix => series.slice(data_split.train.clone())?,
        FitScope::FullSeries => series.clone(),
    };
    let trend = fit_quadratic(&fit_on)?;
    let residual = detrend(series, &trend);
    let scale = NormalizationScale::fit(detrend(&fit_on, &trend).values())?;
    let normalized = scale.apply(&residual);
    Ok(PipelineState {
        series: series.clone(),
        trend,
        scale,
        split: data_split,
        fit_scope: cfg.fit_scope,
        normalized,
    })
}
