use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use trapforge::pipeline::{cmd_augment, cmd_ensemble, cmd_evaluate, AugmentOptions, PipelineConfig};
use trapforge::ClassSet;

const AUGMENT_HELP: &str = "\
Step kinds and their parameters (defaults are conventional choices, not tuned values):
  crop        width, height                      (required)
  rotate      max_degrees = 15, fill = 0         angle uniform in [-max, max]
  hflip
  brightness  min_factor = 0.7, max_factor = 1.3
  blur        min_sigma = 0, max_sigma = 1.5
  noise       min_sigma = 0, max_sigma = 10
  grayscale
  cutout      size = 16, fill = 0
  clahe       grid_w = 8, grid_h = 8, clip_factor = 4.0
Every step also takes `probability` (default 0.5). Mixup alpha defaults to 0.2,
label smoothing epsilon to 0.1.";

#[derive(Parser, Debug)]
#[command(
    name = "trapforge",
    version,
    about = "Camera-trap augmentation, ensembling and scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the seeded augmentation pipeline over a manifest
    #[command(after_help = AUGMENT_HELP)]
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        /// TOML run configuration
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` in the config
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Abort on unreadable images even if the config says on_error = "skip"
        #[arg(long)]
        strict: bool,
        /// Worker threads (0 = one per core); never changes the output
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Score a prediction file against a labelled manifest (macro-F1)
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// train14, full23, or a file with one class name per line
        #[arg(long)]
        classes: String,
    },
    /// Average prediction files into one
    Ensemble {
        #[arg(long, num_args = 1.., required = true)]
        pred: Vec<PathBuf>,
        /// Comma-separated, one per file; normalized to sum to 1
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Augment {
            manifest,
            config,
            seed,
            out,
            strict,
            workers,
        } => {
            let cfg = PipelineConfig::load(&config)?;
            let opts = AugmentOptions { seed, workers, strict };
            let report = cmd_augment(&manifest, &cfg, &out, &opts)
                .with_context(|| format!("augmenting {}", manifest.display()))?;
            println!("{report}");
        }
        Command::Evaluate { pred, truth, classes } => {
            let classes = ClassSet::resolve(&classes)?;
            let report = cmd_evaluate(&pred, &truth, &classes)?;
            println!("{report}");
        }
        Command::Ensemble { pred, weights, out } => {
            let report = cmd_ensemble(&pred, weights.as_deref(), &out)?;
            println!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
