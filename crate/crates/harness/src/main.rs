//! Command-line entry point: one subcommand per experiment.

use std::path::PathBuf;
use std::process::ExitCode;

use bilin_tf::{run_experiment, Experiment, ExperimentConfig};
use clap::Parser;

/// Runs one experiment and writes its CSV (and optional SVG).
#[derive(Debug, Parser)]
#[command(name = "bilin-tf", version, about)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML configuration; its `experiment` key must match.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also renders an SVG plot from the CSV.
    #[arg(long)]
    plot: bool,
}

fn init_threads() {
    if let Some(n) = std::env::var("BILIN_TF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let mut cfg = match &cli.config {
        Some(p) => match ExperimentConfig::from_file(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::defaults(cli.experiment),
    };
    if cfg.experiment != cli.experiment {
        eprintln!("config error at experiment: file names {}, command names {}", cfg.experiment, cli.experiment);
        return ExitCode::from(2);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(o) = &cli.out {
        cfg.output_path = o.to_string_lossy().into_owned();
    }
    match run_experiment(&cfg, cli.plot) {
        Ok(out) => {
            println!("{}", out.csv.display());
            if let Some(s) = &out.svg {
                println!("{}", s.display());
            }
            if out.flagged {
                eprintln!("numeric flags present; see {}", out.csv.display());
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
