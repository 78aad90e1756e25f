use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ptlab::{parse_config, CliError, Command};

/// Perfect-transmission energies, Robin spectra and exceptional points of
/// piecewise-constant potentials.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn threads() -> Result<usize, CliError> {
    match std::env::var("PTLAB_THREADS") {
        Err(_) => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| {
            CliError::Config(vec![format!(
                "PTLAB_THREADS: expected a thread count, got {s:?}"
            )])
        }),
    }
}

fn main_inner(cli: &Cli) -> Result<(), CliError> {
    let n = threads()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(vec![format!("PTLAB_THREADS: {e}")]))?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Config(vec![format!("{}: {e}", cli.config.display())]))?;
    let cfg = parse_config(&text, cli.command)?;
    ptlab::output::prepare_dir(&cli.out)
        .map_err(|e| CliError::Config(vec![format!("--out: {e}")]))?;
    ptlab::run(&cfg, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ptlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
