use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lpscalar::cli_io::{error_exit_code, load_config_with, run, Mode, RunStatus};
use lpscalar::{par, Error};

/// Pseudo-spectral solver and estimate verifier for generalized SQG
/// active scalars on the periodic square.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// simulate | norms | verify-commutator | verify-embedding | verify-bernstein | scaling
    mode: String,

    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,

    /// `key=value` or `initial.key=value`, applied after the file is parsed.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Seed of the initial data.
    #[arg(long)]
    seed: Option<u64>,
}

fn threads_from_env() -> Result<usize, Error> {
    match std::env::var("LPSCALAR_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config {
            key: "LPSCALAR_THREADS".into(),
            message: format!("not a thread count: {v:?}"),
        }),
        Err(_) => Ok(0),
    }
}

fn execute(cli: Cli) -> Result<RunStatus, Error> {
    par::init_threads(threads_from_env()?);
    let mode: Mode = cli.mode.parse()?;
    let mut overrides = cli.overrides;
    if let Some(dir) = cli.output_dir {
        overrides.push(format!(
            "output_dir={}",
            serde_json::Value::String(dir.display().to_string())
        ));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("initial.seed={seed}"));
    }
    let cfg = load_config_with(&cli.config, Some(mode), &overrides)?;
    let summary = run(&cfg)?;
    for f in &summary.files {
        eprintln!("wrote {}", f.display());
    }
    println!("{}", summary.message.trim_end());
    if summary.status != RunStatus::Success {
        eprintln!("lpscalar: run ended with status {:?}", summary.status);
    }
    Ok(summary.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("lpscalar: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
