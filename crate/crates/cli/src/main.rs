use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gaborstab_cli::commands::{cmd_admissible, cmd_poincare, cmd_spectrogram, cmd_stability, RunOptions};
use gaborstab_cli::config::Config;
use gaborstab_cli::suites::cmd_verify;
use gaborstab_cli::{CliError, Outcome, EXIT_CONFIG};

#[derive(Debug, Parser)]
#[command(name = "gaborstab", version, about = "Stability experiments for phase retrieval from STFT magnitudes")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "gaborstab-out")]
    out: PathBuf,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write SVG figures.
    #[arg(long, global = true)]
    svg: bool,
    /// Seed overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Factor applied to every verification tolerance.
    #[arg(long = "tol-scale", global = true)]
    tol_scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write |V_g f| on the configured grid.
    Spectrogram,
    /// Check whether (window, gamma = e^{-a|x| - b|xi|}) is an admissible pair.
    Admissible { window: String, a: f64, b: f64 },
    /// Estimate Poincaré and Cheeger constants of the configured weight.
    Poincare,
    /// Run the configured stability experiments.
    Stability,
    /// Run a named verification suite.
    Verify {
        /// hilbert2, planchshift, slpr, tsw, logconcave, sinh, convequiv or modified-poincare
        suite: String,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let opts = RunOptions {
        out: cli.out,
        config_path: cli.config.clone(),
        jobs: cli.jobs,
        svg: cli.svg,
        seed: cli.seed,
        tol_scale: cli.tol_scale,
    };
    let load = || -> Result<Config, CliError> {
        match &cli.config {
            Some(p) => Config::load(p),
            None => Err(CliError::Usage("this command needs --config".into())),
        }
    };
    match cli.command {
        Command::Spectrogram => cmd_spectrogram(&load()?, &opts),
        Command::Admissible { window, a, b } => {
            let (outcome, report) = cmd_admissible(&window, a, b, &opts)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(outcome)
        }
        Command::Poincare => cmd_poincare(&load()?, &opts),
        Command::Stability => cmd_stability(&load()?, &opts).map(|(o, _)| o),
        Command::Verify { suite } => {
            let cfg = match &cli.config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            cmd_verify(&suite, &cfg, &opts).map(|(o, _)| o)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
