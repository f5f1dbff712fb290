use std::process::ExitCode;

use clap::Parser;
use plaqr_cli::{run, Cli, CliError, CliResult};

/// Caps the worker pool at `PLAQR_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("PLAQR_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Parse(format!("PLAQR_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Parse(format!("cannot size the thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
