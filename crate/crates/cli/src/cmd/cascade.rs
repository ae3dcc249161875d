//! `cascade`: compose a scenario's element chain and export the network
//! S-matrix as a Touchstone two-port file, optionally as seen from port 2.

use std::path::PathBuf;

use chimag_core::cascade::{cascade, direction_swapped, CascadeError};
use chimag_core::io::write_touchstone;

use super::{load_scenario_file, wrote, FormatArg};
use crate::output::write_atomic;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct CascadeArgs {
    /// Scenario description (TOML)
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Touchstone two-port file to write
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Touchstone number format
    #[arg(long, value_enum, default_value_t = FormatArg::Ri)]
    pub format: FormatArg,
    /// Traverse the chain from the other port (reverse order, swap each
    /// element's directional rates)
    #[arg(long)]
    pub reverse: bool,
}

pub fn run(args: &CascadeArgs) -> Result<(), CliError> {
    let config = load_scenario_file(&args.config)?;
    let mut chain = config.build_chain();
    if args.reverse {
        chain = direction_swapped(&chain);
    }
    let spectrum = cascade(&chain, &config.sweep).map_err(|e| match e {
        CascadeError::Empty => CliError::validation("scenario produces an empty element chain"),
        other => CliError::runtime(format!("cascade failed: {other}")),
    })?;

    println!(
        "cascade: {} element{} over {} points{}",
        chain.len(),
        if chain.len() == 1 { "" } else { "s" },
        spectrum.len(),
        if args.reverse { " (reversed)" } else { "" }
    );
    write_atomic(&args.out, &write_touchstone(&spectrum, args.format.into()))?;
    wrote(&args.out);
    Ok(())
}
