//! Prediction of the time difference between UTC and a hydrogen maser.
//!
//! The pipeline removes a quadratic trend from a 5-day-spaced `[UTC - HM]`
//! series, normalizes the residual by its peak, trains a small 1D
//! convolutional network to predict the next point from the previous five,
//! and compares it against a two-state Kalman filter on a held-out tail.

pub mod clock_data;
pub mod cnn;
pub mod config;
pub mod error;
pub mod experiment;
pub mod kalman;
pub mod output;
pub mod pipeline;
pub mod predictor;
pub mod synthetic;
pub mod training;

pub use clock_data::{DataSplit, NormalizationScale, QuadraticTrend, TimeSeries};
pub use cnn::{CnnConfig, CnnModel};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use kalman::KalmanParams;
pub use pipeline::{PipelineState, PrepareConfig};
pub use predictor::PredictionReport;
pub use training::{TrainConfig, TrainingTrace};
