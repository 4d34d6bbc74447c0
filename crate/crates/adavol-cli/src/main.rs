//! Command-line front end: `run` executes experiment configs, `verify`
//! drives the diagnostic suites, `show-bound` prints the admissible step
//! size. Exit codes: 0 success, 1 runtime or divergence failure, 2 usage or
//! config error.

mod config;
mod experiment;
mod svg;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use adavol::diagnostics::{step_size_branches, TheoryConstants};
use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or config: exit 2.
    Usage(String),
    /// Failure while executing valid work: exit 1.
    Runtime(String),
}

#[derive(Parser)]
#[command(name = "adavol", version, about = "Adaptive-volatility sampler experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method block of a TOML experiment config
    Run {
        /// Path to the experiment config
        config: PathBuf,
        /// Override a config value, e.g. --set method.adavol.eta=1e-4
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a diagnostic suite and print a JSON report
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
    },
    /// Print the admissible step-size bound and both of its branches
    ShowBound {
        /// Log-Sobolev constant of the target
        #[arg(long)]
        alpha: f64,
        /// Gradient Lipschitz constant
        #[arg(long = "L")]
        l: f64,
        /// Inverse temperature
        #[arg(long)]
        beta: f64,
        /// Activation amplitude
        #[arg(long)]
        lambda: f64,
        /// Volatility lower bound gamma_k
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Volatility upper bound delta_k
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, set } => {
            let text = fs::read_to_string(&config).map_err(|e| {
                CliError::Usage(format!("reading {}: {e}", config.display()))
            })?;
            let spec = config::parse_config_with_overrides(&text, &set)
                .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
            experiment::run_experiment(&spec)?;
            log::info!(
                "experiment \"{}\" written to {}",
                spec.name,
                spec.output_dir.as_deref().expect("resolved").display()
            );
            Ok(())
        }
        Command::Verify { suite } => {
            let report = verify::run_suite(suite);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serialization")
            );
            if report.all_pass {
                Ok(())
            } else {
                Err(CliError::Runtime(format!(
                    "{} of {} checks failed",
                    report.failed,
                    report.passed + report.failed
                )))
            }
        }
        Command::ShowBound {
            alpha,
            l,
            beta,
            lambda,
            gamma,
            delta,
        } => {
            let tc = TheoryConstants::new(alpha, l, beta, lambda)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if !(gamma >= 1.0) || !(delta >= 1.0) {
                return Err(CliError::Usage(format!(
                    "gamma and delta must be >= 1, got gamma={gamma} delta={delta}"
                )));
            }
            let (stability, contraction) = step_size_branches(&tc, gamma, delta);
            println!("stability branch   delta / ((lambda + 2)^2 L)                      = {stability}");
            println!("contraction branch alpha sqrt(gamma) / (4 beta (lambda + 2)^1.5 L^2) = {contraction}");
            println!("admissible eta     max(stability, contraction)                     = {}",
                stability.max(contraction));
            Ok(())
        }
    }
}
