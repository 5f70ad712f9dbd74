use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nhqhe_cli::config::{tolerance_override, TOLERANCE_ENV};
use nhqhe_cli::{load_config, run, CliError, Mode, RunConfig};

/// Simulator for a PT-symmetric two-level quantum heat engine.
#[derive(Parser)]
#[command(name = "nhqhe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Significant digits in CSV output.
    #[arg(long)]
    precision: Option<usize>,
    /// Report energies and temperatures in units of sqrt(1 - gamma^2).
    #[arg(long)]
    sqrt_units: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, Dirac normalization and PT checks at control points.
    Eigs(RunArgs),
    /// Exact propagators along piecewise-constant drive segments.
    Evolve(RunArgs),
    /// Otto cycle corner states, process changes and efficiency.
    Otto(RunArgs),
    /// Heat, work and entropy around a closed control loop.
    Loop(RunArgs),
    /// Classical variable-mass ideal-gas cycle.
    Classical(RunArgs),
    /// Run the invariant suite.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Optional config with a [check] block.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn configure(mode: Mode, args: RunArgs) -> Result<RunConfig, CliError> {
    let mut config = load_config(&args.config)?;
    if config.mode != mode {
        return Err(CliError::config(format!(
            "{} declares mode `{}` but `{mode}` was requested",
            args.config.display(),
            config.mode
        )));
    }
    if let Some(out) = args.out {
        config.out = out;
    }
    if let Some(p) = args.precision {
        if !(1..=17).contains(&p) {
            return Err(CliError::config(format!(
                "--precision must be in 1..=17, got {p}"
            )));
        }
        config.precision = p;
    }
    config.sqrt_units |= args.sqrt_units;
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut config = match cli.command {
        Command::Eigs(a) => configure(Mode::Eigs, a)?,
        Command::Evolve(a) => configure(Mode::Evolve, a)?,
        Command::Otto(a) => configure(Mode::Otto, a)?,
        Command::Loop(a) => configure(Mode::Loop, a)?,
        Command::Classical(a) => configure(Mode::Classical, a)?,
        Command::Check { seed, config: None } => RunConfig::check(seed),
        Command::Check {
            config: Some(path), ..
        } => {
            let c = load_config(&path)?;
            if c.mode != Mode::Check {
                return Err(CliError::config(format!(
                    "{} is not a check config",
                    path.display()
                )));
            }
            c
        }
    };
    let env = std::env::var(TOLERANCE_ENV).ok();
    if let Some(tol) = tolerance_override(env.as_deref())? {
        config.tolerance = tol;
    }
    let output = run(&config)?;
    for f in &output.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nhqhe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
