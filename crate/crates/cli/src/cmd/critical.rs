//! `critical`: report each resonator's distance from the critical
//! coupling condition kappa_R = 2*gamma_i (with the reflection channel
//! closed, kappa_L = 0).

use std::fmt::Write as _;
use std::path::PathBuf;

use chimag_core::io::ScenarioConfig;
use chimag_core::model::critical_detuning_check;

use super::{load_scenario_file, wrote};
use crate::output::write_atomic;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct CriticalArgs {
    /// Scenario description (TOML)
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Write the report to a file instead of stdout
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

pub fn run(args: &CriticalArgs) -> Result<(), CliError> {
    let config = load_scenario_file(&args.config)?;
    if config.resonators.is_empty() {
        return Err(CliError::validation("the scenario has no resonators"));
    }
    let text = report_text(&config);
    match &args.report {
        Some(path) => {
            write_atomic(path, &text)?;
            wrote(path);
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn report_text(config: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "critical-coupling report");
    let _ = writeln!(s, "  resonators: {}", config.resonators.len());
    for (i, r) in config.resonators.iter().enumerate() {
        let p = &r.params;
        let crit = critical_detuning_check(p);
        let _ = writeln!(s);
        let _ = writeln!(s, "  resonator {}", i + 1);
        let _ = writeln!(s, "    f_m     = {:.9} GHz", p.f_m_hz * 1e-9);
        let _ = writeln!(s, "    gamma_i = {:.6} MHz", p.gamma_i_hz * 1e-6);
        let _ = writeln!(s, "    kappa_R = {:.6} MHz", p.kappa_r_hz * 1e-6);
        let _ = writeln!(
            s,
            "    kappa_L = {:.6} MHz ({})",
            p.kappa_l_hz * 1e-6,
            if crit.perfect_chiral {
                "perfect chiral"
            } else {
                "reflection channel open"
            }
        );
        let _ = writeln!(
            s,
            "    target  = {:.6} MHz (kappa_R = 2*gamma_i)",
            crit.kappa_r_critical_hz * 1e-6
        );
        if crit.kappa_r_critical_hz > 0.0 {
            let _ = writeln!(
                s,
                "    gap     = {:+.6} MHz ({:+.4}% of target)",
                crit.gap_hz * 1e-6,
                100.0 * crit.gap_hz / crit.kappa_r_critical_hz
            );
        } else {
            let _ = writeln!(s, "    gap     = {:+.6} MHz", crit.gap_hz * 1e-6);
        }
        let _ = writeln!(
            s,
            "    status  = {}",
            if crit.is_critical {
                "critical"
            } else if crit.gap_hz > 0.0 {
                "overcoupled"
            } else {
                "undercoupled"
            }
        );
    }
    s
}
