//! Subcommand implementations and helpers they share: scenario loading,
//! float formatting for CSV artifacts, and common flag value types.

use std::path::Path;

use chimag_core::io::{
    load_scenario, parse_touchstone, read_spectrum_csv, ScenarioConfig, TouchstoneFormat,
};
use chimag_core::model::TwoPortSpectrum;

use crate::{warn, CliError};

pub mod cascade;
pub mod critical;
pub mod dispersion;
pub mod fieldmap;
pub mod fit;
pub mod simulate;
pub mod sweep_field;

/// Full-precision scientific notation, the numeric format of every CSV
/// artifact (round-trips f64 exactly).
pub(crate) fn fmt_e(v: f64) -> String {
    format!("{v:.16e}")
}

/// Loads and validates a scenario file, forwarding loader warnings to the
/// diagnostic stream.
pub(crate) fn load_scenario_file(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = crate::output::read_input(path)?;
    let (config, warnings) = load_scenario(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    for w in &warnings {
        warn(w);
    }
    Ok(config)
}

/// Loads a measured spectrum by extension: `.s2p` parses as Touchstone,
/// `.csv` as spectrum CSV. The boolean reports whether the file carried
/// phase information.
pub(crate) fn load_input_spectrum(path: &Path) -> Result<(TwoPortSpectrum, bool), CliError> {
    let text = crate::output::read_input(path)?;
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase());
    match ext.as_deref() {
        Some("s2p") => parse_touchstone(&text)
            .map(|spec| (spec, true))
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display()))),
        Some("csv") => read_spectrum_csv(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display()))),
        _ => Err(CliError::validation(format!(
            "`{}` has an unsupported extension (expected .s2p or .csv)",
            path.display()
        ))),
    }
}

/// Announces a written artifact on stdout.
pub(crate) fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

/// Touchstone number format selector shared by the exporting subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatArg {
    /// Real/imaginary pairs (exact round-trip)
    Ri,
    /// Magnitude and angle in degrees
    Ma,
    /// dB magnitude and angle in degrees
    Db,
}

impl From<FormatArg> for TouchstoneFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ri => TouchstoneFormat::Ri,
            FormatArg::Ma => TouchstoneFormat::Ma,
            FormatArg::Db => TouchstoneFormat::Db,
        }
    }
}

/// Parses an axis override of the form `MIN:MAX`.
pub(crate) fn parse_axis_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected MIN:MAX, got `{s}`"))?;
    let lo: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", a.trim()))?;
    let hi: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", b.trim()))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("range [{lo}, {hi}] must be finite with min < max"));
    }
    Ok((lo, hi))
}

/// Inclusive linear spacing with exact endpoints.
pub(crate) fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            start * (1.0 - t) + stop * t
        })
        .collect()
}
