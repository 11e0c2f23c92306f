use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmcast::experiment::{run_compare, run_generate, run_prepare, run_train, CnnSource};
use hmcast::RunConfig;

/// Predict UTC minus hydrogen-maser time differences with a 1D CNN and a
/// Kalman-filter baseline.
#[derive(Debug, Parser)]
#[command(name = "hmcast", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, env = "HMCAST_CONFIG")]
    config: Option<PathBuf>,

    /// Seed for synthetic generation (`generate`) or weight init (`train`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Replace existing output files.
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic `[UTC - HM]` series as CSV.
    Generate { out: PathBuf },
    /// Detrend, normalize and split one series (or the sum of two).
    Prepare {
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Train the CNN on a prepared directory.
    Train {
        prepared_dir: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        trace_out: PathBuf,
    },
    /// Rolling one-step comparison of the CNN and the Kalman filter.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct CompareArgs {
    prepared_dir: PathBuf,
    #[arg(
        long,
        required_unless_present = "memorize",
        conflicts_with = "memorize"
    )]
    model: Option<PathBuf>,
    /// Predict by looking up the actual next value; checks the plumbing.
    #[arg(long)]
    memorize: bool,
    #[arg(long)]
    report_out: PathBuf,
    /// Defaults to the report path with a `.json` extension.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

fn run(cli: Cli) -> hmcast::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Generate { out } => {
            if let Some(seed) = cli.seed {
                cfg.synthetic.seed = seed;
            }
            run_generate(&cfg, &out, cli.force)?;
            eprintln!("wrote {} points to {}", cfg.synthetic.n, out.display());
        }
        Command::Prepare { inputs, out_dir } => {
            let state = run_prepare(&inputs, &cfg, &out_dir, cli.force)?;
            let (tr, va, te) = state.split.sizes();
            eprintln!("split {tr}/{va}/{te} written to {}", out_dir.display());
        }
        Command::Train {
            prepared_dir,
            model_out,
            trace_out,
        } => {
            if let Some(seed) = cli.seed {
                cfg.train.seed = seed;
            }
            let (_, trace) = run_train(&prepared_dir, &cfg, &model_out, &trace_out, cli.force)?;
            let best = trace.best();
            eprintln!(
                "{} after {} updates; best update {} (val RMSE {:.6})",
                trace.stop_reason,
                trace.records.len(),
                best.update,
                best.val_rmse
            );
        }
        Command::Compare(args) => {
            let source = match args.model {
                Some(path) => CnnSource::File(path),
                None => CnnSource::Memorize,
            };
            let summary_out = args
                .summary_out
                .unwrap_or_else(|| args.report_out.with_extension("json"));
            let report = run_compare(
                &args.prepared_dir,
                &source,
                &cfg,
                &args.report_out,
                &summary_out,
                cli.force,
            )?;
            let s = report.summary;
            eprintln!(
                "{} predictions: cnn {:.3} ns, kf {:.3} ns",
                s.n_pred, s.cnn_e_rms_ns, s.kf_e_rms_ns
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hmcast: {e}");
            ExitCode::FAILURE
        }
    }
}
