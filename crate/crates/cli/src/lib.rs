//! Command-line front end: each analysis pipeline is a subcommand that
//! reads explicit input paths and writes CSV/Touchstone/SVG artifacts
//! atomically. Exit codes: 0 success, 2 validation error, 1 runtime error.

use std::ffi::OsString;
use std::io::IsTerminal as _;

use clap::{ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand};

pub mod cmd;
pub mod output;
pub mod plot;

/// Failure classified by exit code: bad inputs (flags, configs, data
/// shapes) exit 2; environment or numerical failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "chimag",
    version,
    about = "Scattering spectra, cascades, fits, and field-map analysis for chirally coupled waveguide-magnon systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end and export its spectrum artifacts
    Simulate(cmd::simulate::SimulateArgs),
    /// Compose a scenario's element chain and export the network S-matrix
    Cascade(cmd::cascade::CascadeArgs),
    /// Fit the resonator model to a measured spectrum
    Fit(cmd::fit::FitArgs),
    /// Map transmission against a bias-field sweep
    SweepField(cmd::sweep_field::SweepFieldArgs),
    /// Extract chiral coupling rates from a transverse field map
    Fieldmap(cmd::fieldmap::FieldmapArgs),
    /// Tabulate the corrugated-waveguide dispersion relation
    Dispersion(cmd::dispersion::DispersionArgs),
    /// Report each resonator's distance from critical coupling
    Critical(cmd::critical::CriticalArgs),
}

/// True when diagnostics may use ANSI colors.
fn color_enabled() -> bool {
    std::env::var_os("CHIMAG_NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

/// Prints a classified error to the diagnostic stream.
fn report(err: &CliError) {
    if color_enabled() {
        eprintln!("\x1b[31merror:\x1b[0m {}", err.message());
    } else {
        eprintln!("error: {}", err.message());
    }
}

/// Prints a non-fatal diagnostic.
pub(crate) fn warn(msg: &str) {
    if color_enabled() {
        eprintln!("\x1b[33mwarning:\x1b[0m {msg}");
    } else {
        eprintln!("warning: {msg}");
    }
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code. Usage problems print to the diagnostic stream and yield 2;
/// `--help`/`--version` print to stdout and yield 0.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let color = if color_enabled() {
        ColorChoice::Auto
    } else {
        ColorChoice::Never
    };
    let matches = match Cli::command().color(color).try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };

    let result = match cli.command {
        Command::Simulate(args) => cmd::simulate::run(&args),
        Command::Cascade(args) => cmd::cascade::run(&args),
        Command::Fit(args) => cmd::fit::run(&args),
        Command::SweepField(args) => cmd::sweep_field::run(&args),
        Command::Fieldmap(args) => cmd::fieldmap::run(&args),
        Command::Dispersion(args) => cmd::dispersion::run(&args),
        Command::Critical(args) => cmd::critical::run(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}
