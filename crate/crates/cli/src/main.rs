use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use landau_lt::config::{RunConfig, Stage};
use landau_lt::report::run;
use landau_lt::Error;

/// Discrete spectra of perturbed Landau Hamiltonians and Lieb–Thirring sums.
#[derive(Parser)]
#[command(name = "landau", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Landau levels of the basis.
    Levels(Common),
    /// Galerkin spectrum with convergence filter and classification.
    Spectrum(Common),
    /// Spectrum plus determinant-zero cross-check on the scan rectangles.
    Detscan(Common),
    /// Spectrum plus the configured Lieb–Thirring functional.
    Ltcheck(Common),
    /// Distortion and Schwarz–Christoffel probes.
    Conformal(Common),
    /// Blaschke-product zero sums.
    Bgk(Common),
    /// Every stage listed in the configuration.
    Report(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, stages): (&Common, Option<&[Stage]>) = match &cli.command {
        Command::Levels(c) => (c, Some(&[Stage::Levels])),
        Command::Spectrum(c) => (c, Some(&[Stage::Spectrum])),
        Command::Detscan(c) => (c, Some(&[Stage::Detscan])),
        Command::Ltcheck(c) => (c, Some(&[Stage::Lt])),
        Command::Conformal(c) => (c, Some(&[Stage::Conformal])),
        Command::Bgk(c) => (c, Some(&[Stage::Bgk])),
        Command::Report(c) => (c, None),
    };
    let mut config = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = &common.out {
        config.output = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let stages = stages.map(<[Stage]>::to_vec).unwrap_or_else(|| config.stages.clone());
    match run(&config, &stages) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &summary.failures {
                    eprintln!("check failed: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
