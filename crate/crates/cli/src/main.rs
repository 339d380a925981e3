use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use qline::{parse_scenario_as, run_scenario, Kind, RunError};

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Telegrapher,
    Evolve,
    Modes,
    Scatter,
    FranckCondon,
    Parametric,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Telegrapher => Kind::Telegrapher,
            KindArg::Evolve => Kind::Evolve,
            KindArg::Modes => Kind::Modes,
            KindArg::Scatter => Kind::Scatter,
            KindArg::FranckCondon => Kind::FranckCondon,
            KindArg::Parametric => Kind::Parametric,
        }
    }
}

/// Run one scenario file and write its artifacts.
///
/// Exit status: 0 on success, 2 for an invalid scenario, 3 when a solver
/// fails numerically.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Scenario kind; must match `kind` in the file when present there.
    kind: KindArg,
    /// TOML scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Log progress to stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let result = parse_scenario_as(&text, cli.kind.into())
        .map_err(RunError::from)
        .and_then(|s| run_scenario(&s, &cli.out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
