//! Experiment runner CLI.
//!
//! `ris-ssk run` executes a preset or a custom configuration and writes one
//! CSV plus a JSON sidecar per experiment; `ris-ssk summarize` aggregates
//! CSVs into mean curves, orderings and trend checks.
//!
//! Exit codes: 0 success, 2 validation error (bad flags, config or input
//! files), 3 runtime error.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use ris_ssk_core::error::Error;
use ris_ssk_core::experiment::{self, ExperimentArm, ExperimentSpec};
use ris_ssk_core::monte_carlo::PhaseSource;
use ris_ssk_core::SystemConfig;

#[derive(Parser)]
#[command(name = "ris-ssk", version, about = "RIS-assisted SSK MIMO link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset or a custom configuration.
    Run(RunArgs),
    /// Aggregate experiment CSVs into a trend report.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Named preset: fig2, fig3, fig4 or fig5.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON system configuration for a custom run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the preset default and any config seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Symbols per (realization, SNR point).
    #[arg(long)]
    symbols: Option<u64>,
    /// Channel realizations per arm.
    #[arg(long)]
    realizations: Option<u32>,
    /// SNR grid in dB as start:step:stop.
    #[arg(long, value_parser = parse_grid)]
    snr: Option<SnrGrid>,
    /// Comma-separated schemes for custom runs
    /// (optimized, random, no_ris, continuous).
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Use the full-size RIS presets instead of the desk-scale defaults.
    #[arg(long)]
    full: bool,
    /// Experiment name for custom runs (controls output file names).
    #[arg(long, default_value = "custom")]
    name: String,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Experiment CSV files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
struct SnrGrid(Vec<f64>);

fn parse_grid(s: &str) -> Result<SnrGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:step:stop".into());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("bad number `{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !step.is_finite() || step <= 0.0 {
        return Err("step must be positive".into());
    }
    if stop < start {
        return Err("stop must be >= start".into());
    }
    let mut grid = Vec::new();
    let mut x = start;
    while x <= stop + 1e-9 {
        grid.push(x);
        x += step;
    }
    Ok(SnrGrid(grid))
}

const DEFAULT_SEED: u64 = 1;
const DEFAULT_SYMBOLS: u64 = 100_000;
const DEFAULT_REALIZATIONS: u32 = 100;

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec, Error> {
    let mut spec = match (&args.preset, &args.config) {
        (Some(preset), None) => experiment::preset_spec(
            preset,
            args.seed.unwrap_or(DEFAULT_SEED),
            &args.out,
            args.full,
        )?,
        (None, Some(path)) => {
            let mut config = SystemConfig::from_json_file(path)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            let schemes = args.schemes.clone().unwrap_or_default();
            if schemes.is_empty() {
                return Err(Error::InvalidInput(
                    "custom runs need --schemes with at least one entry".into(),
                ));
            }
            let arms = schemes
                .iter()
                .map(|name| {
                    let source = PhaseSource::from_name(name)?;
                    Ok(ExperimentArm {
                        label: name.clone(),
                        config: config.clone(),
                        source,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            ExperimentSpec {
                name: args.name.clone(),
                arms,
                snr_grid_db: (-10..=10).step_by(2).map(f64::from).collect(),
                symbols: DEFAULT_SYMBOLS,
                realizations: DEFAULT_REALIZATIONS,
                seed: config.seed,
                out_dir: args.out.clone(),
            }
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        (None, None) => {
            return Err(Error::InvalidInput(
                "pass either --preset <name> or --config <file>".into(),
            ))
        }
    };

    if let Some(seed) = args.seed {
        spec.seed = seed;
        for arm in &mut spec.arms {
            arm.config.seed = seed;
        }
    }
    if let Some(symbols) = args.symbols {
        spec.symbols = symbols;
    }
    if let Some(realizations) = args.realizations {
        spec.realizations = realizations;
    }
    if let Some(grid) = &args.snr {
        spec.snr_grid_db = grid.0.clone();
    }
    if args.schemes.is_some() && args.preset.is_some() {
        let keep: Vec<String> = args.schemes.clone().unwrap();
        spec.arms.retain(|arm| {
            keep.iter()
                .any(|k| arm.label == *k || arm.source.name() == k)
        });
        if spec.arms.is_empty() {
            return Err(Error::InvalidInput(
                "scheme filter removed every arm of the preset".into(),
            ));
        }
    }
    Ok(spec)
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let spec = build_spec(args)?;
    spec.validate()?;
    eprintln!(
        "running `{}`: {} arms, {} SNR points, {} realizations, {} symbols/point, seed {}",
        spec.name,
        spec.arms.len(),
        spec.snr_grid_db.len(),
        spec.realizations,
        spec.symbols,
        spec.seed
    );
    let out = experiment::run(&spec)?;
    println!("{}", out.csv_path.display());
    println!("{}", out.sidecar_path.display());
    Ok(())
}

fn summarize(args: &SummarizeArgs) -> Result<(), Error> {
    let report = experiment::summarize(&args.files)?;
    print!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Summarize(args) => summarize(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parser_handles_ranges_and_rejects_garbage() {
        assert_eq!(parse_grid("0:2:6").unwrap().0, vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(parse_grid("-4:4:-4").unwrap().0, vec![-4.0]);
        assert!(parse_grid("1:0:5").is_err());
        assert!(parse_grid("5:1:1").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }
}
