//! `envbo`: benchmark studies, ask-tell sessions and the wind-farm
//! experiment.

mod asktell;
mod benchmark;
mod config;
mod output;
mod windfarm;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand};

use config::{BenchmarkConfig, WindfarmFile};

#[derive(Debug, Parser)]
#[command(name = "envbo", version, about = "Bayesian optimisation with measured environmental variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replicated benchmark study; writes checkpoint and summary CSVs.
    Benchmark {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        /// Print the resolved configuration as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Drive a campaign one step at a time through a session file.
    Asktell(asktell::AskTellArgs),
    /// Wind-farm layout experiment.
    Windfarm {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// `windfarm-paper` (default) or `windfarm-smoke`.
        #[arg(long)]
        preset: Option<String>,
        /// Scale the experiment to this many ENVBO evaluations.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        print_config: bool,
    },
}

/// Exit status 1 for configuration or input errors, 2 for runtime errors.
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T, Failure> + Send) -> Result<T, Failure> {
    match jobs {
        None => f(),
        Some(0) => Err(Failure::Config(anyhow!("--jobs must be at least 1"))),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(e.into()))?
            .install(f),
    }
}

fn print_toml<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    print!("{}", config::to_toml(value).map_err(Failure::Runtime)?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Benchmark {
            config,
            preset,
            jobs,
            output,
            replications,
            budget,
            print_config,
        } => {
            let cfg: BenchmarkConfig = match (config, preset) {
                (Some(path), _) => config::load(&path),
                (None, Some(name)) => config::benchmark_preset(&name),
                (None, None) => unreachable!("clap requires one of --config and --preset"),
            }
            .map_err(Failure::Config)?;
            if print_config {
                return print_toml(&cfg);
            }
            let ov = benchmark::Overrides {
                output: output.as_deref(),
                replications,
                budget,
            };
            with_jobs(jobs, || benchmark::run(cfg, &ov))
        }
        Command::Asktell(args) => asktell::run(args),
        Command::Windfarm {
            config,
            preset,
            budget,
            jobs,
            output,
            print_config,
        } => {
            let file: WindfarmFile = match config {
                Some(path) => config::load(&path),
                None => config::windfarm_preset(preset.as_deref().unwrap_or("windfarm-paper")),
            }
            .map_err(Failure::Config)?;
            if print_config {
                return print_toml(&file);
            }
            with_jobs(jobs, || windfarm::run(file, budget, output.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("invalid configuration or input: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

