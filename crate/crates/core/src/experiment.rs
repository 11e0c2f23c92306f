//! File-staged experiment: generate → prepare → train → compare.
//!
//! Each stage reads the previous stage's files and writes its own outputs
//! plus a JSON manifest describing how they were produced.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clock_data::{combine_series, read_series, write_series};
use crate::cnn::CnnModel;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::output::{read_json, write_json};
use crate::pipeline::{prepare, PipelineState};
use crate::predictor::{compare, compare_with, Memorizer, PredictionReport};
use crate::synthetic::generate;
use crate::training::{make_target_windows, make_windows, train, StopReason, TrainingTrace};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const PREPARED_STATE: &str = "prepared.json";
pub const PREPARED_SERIES: &str = "series.csv";
pub const PREPARED_RESIDUAL: &str = "residual.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_sizes: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_update: Option<usize>,
}

impl RunManifest {
    fn new(command: &str, seed: u64, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            config: *config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            split_sizes: None,
            stop_reason: None,
            best_update: None,
        }
    }
}

/// `<path>.manifest.json`
pub fn manifest_path_for(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn run_generate(cfg: &RunConfig, out: &Path, force: bool) -> Result<()> {
    let series = generate(&cfg.synthetic)?;
    let manifest_path = manifest_path_for(out);
    write_series(&series, out, force)?;
    let mut manifest = RunManifest::new("generate", cfg.synthetic.seed, cfg);
    manifest.outputs = vec![out.to_path_buf(), manifest_path.clone()];
    write_json(&manifest_path, force, &manifest)
}

/// Reads one series, or sums two aligned ones, and writes the preprocessing
/// state into `out_dir`.
pub fn run_prepare(
    inputs: &[PathBuf],
    cfg: &RunConfig,
    out_dir: &Path,
    force: bool,
) -> Result<PipelineState> {
    let interval = cfg.synthetic.interval;
    let series = match inputs {
        [one] => read_series(one, interval)?,
        [a, b] => combine_series(&read_series(a, interval)?, &read_series(b, interval)?)?,
        _ => {
            return Err(Error::Config(format!(
                "prepare takes one or two input series, got {}",
                inputs.len()
            )))
        }
    };
    let state = prepare(&series, &cfg.prepare)?;

    ensure_dir(out_dir)?;
    let outputs =
        [PREPARED_SERIES, PREPARED_RESIDUAL, PREPARED_STATE, MANIFEST].map(|f| out_dir.join(f));
    write_series(&state.series, &outputs[0], force)?;
    write_series(&state.residual(), &outputs[1], force)?;
    write_json(&outputs[2], force, &state)?;

    let mut manifest = RunManifest::new("prepare", cfg.train.seed, cfg);
    manifest.inputs = inputs.to_vec();
    manifest.outputs = outputs.to_vec();
    let (tr, va, te) = state.split.sizes();
    manifest.split_sizes = Some([tr, va, te]);
    write_json(&outputs[3], force, &manifest)?;
    Ok(state)
}

pub fn load_prepared(dir: &Path) -> Result<PipelineState> {
    read_json(&dir.join(PREPARED_STATE))
}

pub fn run_train(
    prepared_dir: &Path,
    cfg: &RunConfig,
    model_out: &Path,
    trace_out: &Path,
    force: bool,
) -> Result<(CnnModel, TrainingTrace)> {
    let state = load_prepared(prepared_dir)?;
    let width = cfg.cnn.width;
    let train_ds = make_windows(&state.normalized, state.split.train.clone(), width)?;
    let val_ds = make_target_windows(&state.normalized, state.split.val.clone(), width)?;

    let init = CnnModel::init_weights(cfg.cnn, cfg.train.seed);
    let (model, trace) = train(&init, &train_ds, &val_ds, &cfg.train)?;

    let manifest_path = manifest_path_for(model_out);
    model.save(model_out, force)?;
    trace.write_csv(trace_out, force)?;

    let mut manifest = RunManifest::new("train", cfg.train.seed, cfg);
    manifest.inputs = vec![prepared_dir.join(PREPARED_STATE)];
    manifest.outputs = vec![
        model_out.to_path_buf(),
        trace_out.to_path_buf(),
        manifest_path.clone(),
    ];
    let (tr, va, te) = state.split.sizes();
    manifest.split_sizes = Some([tr, va, te]);
    manifest.stop_reason = Some(trace.stop_reason);
    manifest.best_update = Some(trace.best().update);
    write_json(&manifest_path, force, &manifest)?;
    Ok((model, trace))
}

/// Model source for the comparison stage.
#[derive(Debug, Clone)]
pub enum CnnSource {
    File(PathBuf),
    /// Replace both methods with a lookup of the actual next value.
    Memorize,
}

pub fn run_compare(
    prepared_dir: &Path,
    source: &CnnSource,
    cfg: &RunConfig,
    report_out: &Path,
    summary_out: &Path,
    force: bool,
) -> Result<PredictionReport> {
    let state = load_prepared(prepared_dir)?;
    let test = state.split.test.clone();
    let mut manifest = RunManifest::new("compare", cfg.train.seed, cfg);
    manifest.inputs = vec![prepared_dir.join(PREPARED_STATE)];

    let report = match source {
        CnnSource::File(path) => {
            manifest.inputs.push(path.clone());
            let model = CnnModel::load(path)?;
            compare(&model, &cfg.kalman, &state, test)?
        }
        CnnSource::Memorize => {
            let width = cfg.cnn.width;
            let m = Memorizer::new(&state.normalized, width);
            compare_with(&m, &m, &state, test, width)?
        }
    };

    let manifest_path = manifest_path_for(report_out);
    report.write_csv(report_out, force)?;
    report.write_summary(summary_out, force)?;
    manifest.outputs = vec![
        report_out.to_path_buf(),
        summary_out.to_path_buf(),
        manifest_path.clone(),
    ];
    let (tr, va, te) = state.split.sizes();
    manifest.split_sizes = Some([tr, va, te]);
    write_json(&manifest_path, force, &manifest)?;
    Ok(report)
}
