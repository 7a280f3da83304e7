use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

use opstable::cli::{exit_code, run, ErrorRecord, RunConfig};

/// Runs one JSON-configured computation and writes its artifacts and
/// `run_manifest.json`.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Run configuration (JSON).
    config: PathBuf,
    /// Output directory; overrides `output.path`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Seed; overrides `seed`.
    #[arg(short, long)]
    seed: Option<u64>,
    /// Repeat for more log output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn fail(e: &opstable::error::Error) -> ExitCode {
    let rec = ErrorRecord::from_error(e);
    eprintln!("{}", serde_json::json!({ "error": rec }));
    ExitCode::from(exit_code(e) as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(o) = args.output {
        cfg.output.path = o;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    match run(cfg) {
        Ok(outcome) => {
            if let Some(rec) = &outcome.manifest.error {
                eprintln!("{}", serde_json::json!({ "error": rec }));
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => fail(&e),
    }
}
