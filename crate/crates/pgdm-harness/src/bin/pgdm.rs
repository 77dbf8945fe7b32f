//! `pgdm` — projected diffusion sampling experiments.
//!
//! Every subcommand reads a flat TOML config (`--config`), optionally
//! overrides its seed and output directory from the command line, and
//! writes deterministic artifacts into the output directory. Errors
//! print one stage-tagged line to stderr and exit nonzero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pgdm_harness::experiments;
use pgdm_harness::{ExperimentConfig, HarnessError, RunSummary, Stage};

#[derive(Parser)]
#[command(
    name = "pgdm",
    version,
    about = "Projected diffusion sampling: experiments, theory checks, and reports"
)]
struct Cli {
    /// Experiment config file (flat TOML schema).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed, overriding the config's `seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory, overriding the config's `out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the experiment's dataset files.
    GenData,
    /// Train the score network and write the checkpoint.
    Train,
    /// Run the configured sampler variant and write samples.
    Sample,
    /// Run the full experiment pipeline: data, model, sampling,
    /// metrics, theory checks, reports, and plots.
    Eval,
    /// Statistically verify the projected-update error bounds.
    VerifyTheory,
    /// Sweep a sampler parameter and measure distribution fidelity.
    Sweep,
    /// Regenerate the SVG plots from a results directory's CSV files.
    Plot,
}

fn load_config(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        HarnessError::new(
            Stage::Config,
            "a config file is required; pass --config <FILE>",
        )
    })?;
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.to_string_lossy().into_owned());
    }
    let out_dir = match &cfg.out_dir {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from("runs").join(cfg.experiment.name()),
    };
    Ok((cfg, out_dir))
}

fn run(cli: &Cli) -> Result<RunSummary, HarnessError> {
    let (cfg, out) = load_config(cli)?;
    match cli.command {
        Command::GenData => experiments::run_gen_data(&cfg, &out),
        Command::Train => experiments::run_train(&cfg, &out),
        Command::Sample => experiments::run_sample(&cfg, &out),
        Command::Eval => experiments::run_experiment(&cfg, &out),
        Command::VerifyTheory => experiments::run_verify_theory(&cfg, &out),
        Command::Sweep => experiments::run_sweep(&cfg, &out),
        Command::Plot => {
            let written = experiments::replot(&cfg, &out)?;
            let hash = cfg.content_hash();
            let lines = if written.is_empty() {
                vec!["no plottable CSV artifacts found".to_string()]
            } else {
                written
                    .iter()
                    .map(|p| format!("rendered {}", p.display()))
                    .collect()
            };
            Ok(RunSummary {
                out_dir: out,
                config_sha256: hash,
                lines,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!(
                "{} (config {})",
                summary.out_dir.display(),
                &summary.config_sha256[..12]
            );
            for line in &summary.lines {
                println!("  {line}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("pgdm: {err}");
            ExitCode::FAILURE
        }
    }
}
