use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use glauber_cli::compare::compare_bundles;
use glauber_cli::config::{ExperimentConfig, Scenario};
use glauber_cli::run::run;

/// Correlation-function dynamics of a birth-and-death lattice gas.
#[derive(Parser)]
#[command(name = "glauber", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the result bundle.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the per-audit summary.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every parameter condition and report bounds and margins.
    ValidateRegime(RunArgs),
    /// Evolve an initial correlation function and audit the trajectory.
    Evolve(RunArgs),
    /// Enumerate the equilibrium state and measure its stationarity defect.
    FixedPoint(RunArgs),
    /// Simulate the chain and compare estimators against enumeration.
    McSim(RunArgs),
    /// Evolve an equilibrium start and probe local pattern positivity.
    CheckPositivity(RunArgs),
    /// Measure the relaxation rate toward the equilibrium state.
    Ergodicity(RunArgs),
    /// Compare two result bundles file by file.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Largest acceptable absolute difference.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        #[arg(long)]
        quiet: bool,
    },
}

impl Command {
    fn expected_scenario(&self) -> Option<Scenario> {
        match self {
            Command::ValidateRegime(_) => Some(Scenario::RegimeReport),
            Command::Evolve(_) => Some(Scenario::Evolve),
            Command::FixedPoint(_) => Some(Scenario::FixedPoint),
            Command::McSim(_) => Some(Scenario::McCompare),
            Command::CheckPositivity(_) => Some(Scenario::Positivity),
            Command::Ergodicity(_) => Some(Scenario::Ergodicity),
            Command::Compare { .. } => None,
        }
    }
}

fn run_scenario(args: &RunArgs, expected: Scenario) -> anyhow::Result<bool> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    anyhow::ensure!(
        cfg.scenario == expected,
        "config declares scenario `{}`, but this subcommand runs `{}`",
        cfg.scenario.name(),
        expected.name()
    );
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let bundle = run(&cfg, &args.out, args.quiet)?;
    Ok(bundle.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let expected = cli.command.expected_scenario();
    let outcome = match &cli.command {
        Command::ValidateRegime(a)
        | Command::Evolve(a)
        | Command::FixedPoint(a)
        | Command::McSim(a)
        | Command::CheckPositivity(a)
        | Command::Ergodicity(a) => run_scenario(a, expected.unwrap()),
        Command::Compare {
            dir_a,
            dir_b,
            tolerance,
            quiet,
        } => (|| {
            let report = compare_bundles(dir_a, dir_b)?;
            if !quiet {
                for f in &report.files {
                    let sig = f
                        .max_sigmas
                        .map(|s| format!(", max sigmas {s:.3}"))
                        .unwrap_or_default();
                    println!(
                        "{}: {} rows, max |diff| {:.6e}{}",
                        f.name, f.rows, f.max_abs_diff, sig
                    );
                }
            }
            Ok(report.within(*tolerance))
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
