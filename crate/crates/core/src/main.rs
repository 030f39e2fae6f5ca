use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridtwin::pipeline::{execute, load_config, Command, Overrides, PipelineError, RunConfig};

/// Residential grid digital twin and day-ahead demand forecasting benchmark.
#[derive(Debug, Parser)]
#[command(name = "gridtwin", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write the household registry and PV profiles as profile CSV.
    Generate(Common),
    /// Simulate the scenarios and write summary statistics and series.
    Simulate(Common),
    /// Backtest the estimators and write forecasts.csv.
    Forecast(Common),
    /// Compute metrics and significance tests from an existing forecasts.csv.
    Evaluate(Common),
    /// Run every stage.
    Run(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration (required for simulate, forecast and run).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of households (desk-scale override).
    #[arg(long)]
    households: Option<usize>,
    /// Scenario replications.
    #[arg(long)]
    replications: Option<usize>,
}

fn resolve(command: Command, args: &Common) -> Result<RunConfig, PipelineError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None if matches!(command, Command::Generate | Command::Evaluate) => {
            RunConfig::new(&["CS", "S1", "S2"], &["day_before"])
        }
        None => return Err(PipelineError::Config("--config is required for this command".into())),
    };
    config.apply(&Overrides {
        output_dir: args.out.clone(),
        seed: args.seed,
        households: args.households,
        replications: args.replications,
    });
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let (command, args) = match &cli.command {
        Cmd::Generate(a) => (Command::Generate, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Forecast(a) => (Command::Forecast, a),
        Cmd::Evaluate(a) => (Command::Evaluate, a),
        Cmd::Run(a) => (Command::Run, a),
    };
    let result = resolve(command, args).and_then(|config| execute(command, &config));
    match result {
        Ok(manifest) => {
            for a in &manifest.artifacts {
                println!("{}  {}", a.sha256, a.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
