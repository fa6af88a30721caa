use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use robust_learning_cli::{
    cmd_simulate, cmd_solve, cmd_sweep, cmd_value, parse_grid, Failure, Format, Scenario, SimOverrides,
};

/// Robust optimal learning: thresholds, value functions and Monte Carlo.
#[derive(Parser, Debug)]
#[command(name = "rlearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Write the result here instead of stdout (overrides `[output] path`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the stopping thresholds.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the value function.
    Value {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Simulate the optimal policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Re-solve over a grid of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of eps, c, alpha, u2.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values or `from:to:count`.
        #[arg(long)]
        grid: Option<String>,
    },
}

fn load(path: &PathBuf) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)?;
    Scenario::parse(&text).map_err(Failure::Input)
}

fn emit(text: &str, out: Option<PathBuf>, scenario: &Scenario) -> Result<(), Failure> {
    let target = out.or_else(|| scenario.output.as_ref().and_then(|o| o.path.clone()).map(PathBuf::from));
    match target {
        Some(path) => std::fs::write(&path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Other),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, result, scenario) = match cli.command {
        Command::Solve { common } => {
            let s = load(&common.scenario)?;
            let r = cmd_solve(&s);
            (common, r, s)
        }
        Command::Value { common, format } => {
            let s = load(&common.scenario)?;
            let f = format
                .or_else(|| s.output.as_ref().and_then(|o| o.format))
                .unwrap_or(Format::Csv);
            let r = cmd_value(&s, f);
            (common, r, s)
        }
        Command::Simulate { common, seed, paths, dt } => {
            let s = load(&common.scenario)?;
            let r = cmd_simulate(&s, SimOverrides { seed, paths, dt });
            (common, r, s)
        }
        Command::Sweep { common, param, grid } => {
            let s = load(&common.scenario)?;
            let grid = grid.map(|g| parse_grid(&g)).transpose().map_err(Failure::Input)?;
            let r = cmd_sweep(&s, param.as_deref(), grid);
            (common, r, s)
        }
    };
    match result {
        Ok(text) => emit(&text, common.out, &scenario),
        Err(Failure::Censored { report, message }) => {
            emit(&report, common.out, &scenario)?;
            Err(Failure::Censored { report, message })
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rlearn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
