//! Thin experiment-runner CLI: parses a JSON config, dispatches to the
//! library, and writes the artifact. Exit codes: 0 success, 2 config error,
//! 3 numeric guard failure, 1 anything else.

use std::process::ExitCode;

use clap::Parser;

use batchcov::config::{Command as ConfigCommand, ExperimentConfig, OutputFormat};
use batchcov::error::Error;
use batchcov::runner;

#[derive(Parser)]
#[command(name = "batchcov", version, about = "Batching CI experiment runner")]
struct Cli {
    /// Experiment command; must match the config's `command` field
    #[arg(value_parser = parse_command)]
    command: ConfigCommand,
    /// Path to the JSON experiment config
    #[arg(long)]
    config: String,
    /// Worker threads (overrides config; results are identical either way)
    #[arg(long)]
    workers: Option<usize>,
    /// RNG seed (overrides config)
    #[arg(long)]
    seed: Option<u64>,
    /// Output artifact path (overrides config); stdout when absent
    #[arg(long)]
    out: Option<String>,
    /// Output format (overrides config)
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_command(s: &str) -> Result<ConfigCommand, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown command `{s}`"))
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(format!("unknown format `{other}` (csv or json)")),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::InvalidArgument { .. } | Error::DimensionMismatch(_) => 2,
        Error::TooManyRejections { .. }
        | Error::DegenerateGradient(_)
        | Error::NotPositiveDefinite
        | Error::NotSymmetric(_)
        | Error::SingularCovariance
        | Error::TooFewSamples { .. }
        | Error::TooFewAtomVisits
        | Error::TrajectoryTooShort { .. }
        | Error::InsufficientReps { .. } => 3,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config `{}`: {e}", cli.config);
            return ExitCode::from(2);
        }
    };
    let mut config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if config.command != cli.command {
        eprintln!(
            "error: config error in field `command`: config says `{}` but the CLI asked for `{}`",
            config.command.name(),
            cli.command.name()
        );
        return ExitCode::from(2);
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    if let Some(s) = cli.seed {
        config.seed = Some(s);
    }
    if let Some(f) = cli.format {
        config.format = Some(f);
    }

    match runner::run(&config)
        .and_then(|art| runner::write_artifact(&art, &config, cli.out.as_deref()))
    {
        Ok(text) => {
            if cli.out.is_none() && config.out.is_none() {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
