//! `pifnet`: command-line driver for the forecasting pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pifnet_core::metrics::format_table;
use pifnet_core::pipeline::{self, RunConfig, Variant};
use pifnet_core::Error;

#[derive(Parser)]
#[command(name = "pifnet", version, about = "Building load forecasting pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect and repair load outliers in the training region.
    Preprocess(Common),
    /// Rank covariates by Shapley importance and select a subset.
    SelectFeatures(Common),
    /// Train the forecasting network.
    Train(Common),
    /// Score the trained network on the test region.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to evaluate; defaults to the run directory's model.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run the stage ablation over several seeds.
    Ablate(Common),
    /// Run the one-at-a-time hyperparameter sweeps.
    Sensitivity(Common),
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    if let Some(dir) = &common.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Preprocess(c) => {
            let r = pipeline::run_preprocess(&load(&c)?)?;
            println!(
                "rows={} train_rows={} flagged={} filled={}",
                r.rows,
                r.train_rows,
                r.flagged.len(),
                r.filled.iter().map(|f| f.1).sum::<usize>()
            );
        }
        Command::SelectFeatures(c) => {
            let r = pipeline::run_select_features(&load(&c)?)?;
            for (name, imp) in r.features.iter().zip(&r.importance) {
                println!("{name}\t{imp:.6}");
            }
            println!("selected: {}", r.selected.join(","));
        }
        Command::Train(c) => {
            let r = pipeline::run_train(&load(&c)?)?;
            if let Some(last) = r.log.last() {
                println!("epochs={} loss={:.6} mse={:.6}", last.epoch, last.loss, last.mse);
            }
            println!("checkpoint: {}", r.checkpoint.display());
        }
        Command::Evaluate { common, checkpoint } => {
            let r = pipeline::run_evaluate(&load(&common)?, checkpoint.as_deref())?;
            print!(
                "{}",
                format_table(&[("pifnet".into(), r.model), ("persistence".into(), r.persistence)])
            );
        }
        Command::Ablate(c) => {
            let r = pipeline::run_ablation(&load(&c)?)?;
            for run in r.runs.iter().filter(|r| r.outcome.is_err()) {
                eprintln!("{} seed {}: {}", run.variant.key(), run.seed, run.outcome.as_ref().unwrap_err());
            }
            for (v, m) in &r.medians {
                match m {
                    Some(m) => println!("{:<24} median MSE {:.6}  R2 {:.4}", v.label(), m[1], m[4]),
                    None => println!("{:<24} no successful runs", Variant::label(*v)),
                }
            }
        }
        Command::Sensitivity(c) => {
            let r = pipeline::run_sensitivity(&load(&c)?)?;
            for (s, v) in &r.spread {
                println!("{:<12} STD MAE {:.6}  MSE {:.6}  R2 {:.6}", s.key(), v[0], v[1], v[4]);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
