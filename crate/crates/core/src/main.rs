use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rocinfer::io::{execute, Command, RunConfig, Settings};
use rocinfer::Result;

/// Pooled, covariate-specific and covariate-adjusted ROC curve estimation.
#[derive(Parser)]
#[command(name = "rocinfer", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Pooled ROC curve (emp, kernel, bb, dpm).
    Pooled(Args),
    /// Covariate-specific ROC curves (sp, kernel, bnp).
    Croc(Args),
    /// Covariate-adjusted ROC curve (sp, kernel, bnp).
    Aroc(Args),
    /// Optimal thresholds; covariate-specific when a formula is given.
    Threshold(Args),
    /// Write a synthetic endocrine-style CSV.
    Simulate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML file with top-level keys and per-subcommand sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

fn resolve(cli: Cli) -> Result<RunConfig> {
    let (command, args) = match cli.command {
        Sub::Pooled(a) => (Command::Pooled, a),
        Sub::Croc(a) => (Command::Croc, a),
        Sub::Aroc(a) => (Command::Aroc, a),
        Sub::Threshold(a) => (Command::Threshold, a),
        Sub::Simulate(a) => (Command::Simulate, a),
    };
    let base = match &args.config {
        Some(path) => Settings::from_file(path, command)?,
        None => Settings::default(),
    };
    Ok(RunConfig::new(command, base.overlay(&args.settings)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(cli).and_then(|cfg| {
        // The summary goes to stdout unless the JSON itself does.
        if cfg.settings.out.is_some() {
            execute(&cfg, &mut std::io::stdout().lock())
        } else {
            execute(&cfg, &mut std::io::stderr().lock())
        }
    });
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
