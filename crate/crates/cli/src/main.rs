use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wmad_cli::pipeline;
use wmad_cli::{CliError, PipelineConfig};

/// World-model anomaly detection pipeline for simulated driving.
#[derive(Parser)]
#[command(name = "wmad", version, about)]
struct Cli {
    /// Seed applied to every stage, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON pipeline configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root output directory shared by all stages.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for scoring.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Force single-threaded, order-stable execution everywhere.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the train/eval dataset and its manifest.
    GenData,
    /// Train the world model and the ensemble members.
    Train,
    /// Predict futures for one episode and dump the probability grids.
    Rollout {
        /// Episode id from the manifest.
        #[arg(long)]
        episode: String,
        /// Last observed frame index.
        #[arg(long)]
        start: usize,
        /// Predicted frames.
        #[arg(long, default_value_t = 15)]
        horizon: usize,
        /// Sampled futures.
        #[arg(long, default_value_t = 8)]
        futures: usize,
    },
    /// Score every eval episode with all five scorer families.
    Score,
    /// Compute the measured applicability matrix from stored scores.
    Evaluate,
    /// Render a previously computed report.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let threads = if cli.deterministic { 1 } else { cli.threads.max(1) };
    let out = &cli.out;

    match cli.command {
        Command::GenData => {
            let manifest = pipeline::cmd_gen_data(&cfg, out)?;
            println!(
                "wrote {} episodes to {}",
                manifest.entries.len(),
                pipeline::data_dir(out).display()
            );
        }
        Command::Train => {
            let outcome = pipeline::cmd_train(&cfg, out)?;
            println!(
                "trained {} steps, final loss {:.4}, best validation loss {:.4}",
                outcome.main.steps, outcome.main.final_loss, outcome.main.best_val_loss
            );
            println!(
                "checkpoints: {} (+{} ensemble members)",
                outcome.main.best_path.display(),
                outcome.member_paths.len()
            );
        }
        Command::Rollout {
            episode,
            start,
            horizon,
            futures,
        } => {
            let path = pipeline::cmd_rollout(&cfg, out, &episode, start, horizon, futures)?;
            println!("wrote {}", path.display());
        }
        Command::Score => {
            let n = pipeline::cmd_score(&cfg, out, threads)?;
            println!("wrote {n} score series to {}", pipeline::scores_csv(out).display());
        }
        Command::Evaluate => {
            let report = pipeline::cmd_evaluate(&cfg, out)?;
            println!("wrote {}", pipeline::report_json(out).display());
            print!("{}", wmad_core::eval::render_report(&report));
        }
        Command::Report => {
            print!("{}", pipeline::cmd_report(out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.to_string(), "exit": e.exit_code() });
            eprintln!("{line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
