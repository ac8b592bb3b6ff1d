use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdlab_cli::{execute, CliError, Config};

#[derive(Parser)]
#[command(name = "pdlab", version, about = "Kicked spin-model simulations driven by key=value configs")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run the command named in CONFIG.
    Run {
        config: PathBuf,
        /// Override a config entry, e.g. `-s K=0.5`. Repeatable.
        #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (beats PDLAB_OUT_DIR and the `out` key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the available commands and their keys.
    Commands,
}

fn run(config: &PathBuf, overrides: &[String], out: Option<&PathBuf>, workers: Option<usize>) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = Config::parse(&text)?;
    for o in overrides {
        cfg.set_override(o)?;
    }
    execute(&cfg, out.map(PathBuf::as_path), workers)
}

fn main() -> ExitCode {
    match Cli::parse().action {
        Action::Commands => {
            for c in pdlab_cli::commands::COMMANDS {
                let keys = pdlab_cli::commands::allowed_keys(c).unwrap_or_default();
                println!("{c}: {}", keys.join(", "));
            }
            ExitCode::SUCCESS
        }
        Action::Run { config, overrides, out, workers } => match run(&config, &overrides, out.as_ref(), workers) {
            Ok(manifest) => {
                println!("{}", manifest.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("pdlab: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
