//! `nadim` command-line front end.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CommandKind, Format, Params, RunConfig};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "nadim", version, about = "Dimension spectra of non-autonomous conformal IFS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Built-in system (see `nadim presets`)
    #[arg(long, conflicts_with = "spec")]
    preset: Option<String>,
    /// System document (TOML)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pressure proxies and their trailing-window extremes over a t grid
    Pressure(Common),
    /// Zeros of the upper and lower pressure (Hausdorff and packing estimates)
    Jump(Common),
    /// Moran exponents s_k for k = 1..=K
    Moran(Common),
    /// Intermediate dimension spectrum over a theta grid in (0, 1]
    Spectrum(Common),
    /// Finite-depth attractor as intervals
    Realize(Common),
    /// Box counts and the fitted box dimension of a realization
    Boxdim(Common),
    /// Local exponents of the natural measure on a realization
    Massdim(Common),
    /// Finite subsystem of an infinite system, with coverage checks
    Truncate(Common),
    /// Standing-condition ratio sequences and verdicts
    Diagnose(Common),
    /// Run a command described by a config file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize the artifacts in a directory (reads files only)
    Report {
        dir: PathBuf,
        /// Also write the summary to this file
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the built-in systems
    Presets,
}

fn compute(kind: CommandKind, c: Common) -> RunConfig {
    RunConfig {
        command: kind,
        preset: c.preset,
        spec: c.spec,
        out: c.out,
        format: c.format,
        params: c.params,
    }
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("NADIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::config("bad-env", format!("NADIM_THREADS=`{raw}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config("bad-env", e.to_string()))
}

fn dispatch(cmd: Command) -> CliResult<()> {
    init_threads()?;
    let cfg = match cmd {
        Command::Pressure(c) => compute(CommandKind::Pressure, c),
        Command::Jump(c) => compute(CommandKind::Jump, c),
        Command::Moran(c) => compute(CommandKind::Moran, c),
        Command::Spectrum(c) => compute(CommandKind::Spectrum, c),
        Command::Realize(c) => compute(CommandKind::Realize, c),
        Command::Boxdim(c) => compute(CommandKind::Boxdim, c),
        Command::Massdim(c) => compute(CommandKind::Massdim, c),
        Command::Truncate(c) => compute(CommandKind::Truncate, c),
        Command::Diagnose(c) => compute(CommandKind::Diagnose, c),
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            config::parse_config(&text)?
        }
        Command::Report { dir, output } => {
            let text = report::render(&dir)?;
            print!("{text}");
            if let Some(path) = output {
                std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            }
            return Ok(());
        }
        Command::Presets => {
            for name in nadim::system::presets::NAMES {
                println!("{name}");
            }
            return Ok(());
        }
    };
    for path in commands::execute(&cfg)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config("usage", e.to_string().trim().to_string());
            eprintln!("{}", err.json());
            return ExitCode::from(err.kind.exit_code() as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.json());
            ExitCode::from(err.kind.exit_code() as u8)
        }
    }
}
