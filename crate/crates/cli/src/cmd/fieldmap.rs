//! `fieldmap`: scan a magnet along the transverse axis of a field map and
//! tabulate the chiral coupling rates it picks up at each position.

use std::path::PathBuf;

use chimag_core::fieldmap::{kappa_profile, CouplingPrefactor, FieldMapError, ProfileEntry};
use chimag_core::io::read_fieldmap_csv;

use super::{fmt_e, linspace, wrote};
use crate::output::{read_input, write_atomic};
use crate::plot::{render_plot, PlotData, PlotKind, PlotSpec, Series};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct FieldmapArgs {
    /// Transverse field map (CSV)
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Longitudinal probe position (mm)
    #[arg(long, value_name = "MM", allow_negative_numbers = true)]
    pub x_mm: f64,
    /// Magnet footprint radius (mm); 0 probes the nearest sample
    #[arg(long, value_name = "MM", default_value_t = 0.5)]
    pub radius_mm: f64,
    /// Profile CSV to write
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// First transverse position (mm); defaults to the map's own y axis
    #[arg(
        long,
        value_name = "MM",
        allow_negative_numbers = true,
        requires = "y_stop_mm",
        requires = "n_positions"
    )]
    pub y_start_mm: Option<f64>,
    /// Last transverse position (mm)
    #[arg(
        long,
        value_name = "MM",
        allow_negative_numbers = true,
        requires = "y_start_mm"
    )]
    pub y_stop_mm: Option<f64>,
    /// Number of probe positions (>= 2, endpoints included)
    #[arg(long, value_name = "N", requires = "y_start_mm")]
    pub n_positions: Option<usize>,
    /// Render the rate profile as an SVG figure
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
    /// Saturation magnetization (A/m)
    #[arg(long, value_name = "A_PER_M", default_value_t = 1.94e5)]
    pub ms: f64,
    /// Magnet volume (m^3); default is a 1 mm sphere
    #[arg(long, value_name = "M3", default_value_t = std::f64::consts::PI / 6.0 * 1e-9)]
    pub vs: f64,
    /// Gyromagnetic ratio (Hz/T)
    #[arg(long, value_name = "HZ_PER_T", default_value_t = 2.8e10)]
    pub gyro: f64,
}

pub fn run(args: &FieldmapArgs) -> Result<(), CliError> {
    let text = read_input(&args.input)?;
    let map = read_fieldmap_csv(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", args.input.display())))?;

    let ys: Vec<f64> = match (args.y_start_mm, args.y_stop_mm, args.n_positions) {
        (Some(start), Some(stop), Some(n)) => {
            if n < 2 {
                return Err(CliError::validation(format!(
                    "--n-positions = {n}, a scan needs at least 2 positions"
                )));
            }
            if !(start.is_finite() && stop.is_finite() && start < stop) {
                return Err(CliError::validation(format!(
                    "scan range [{start}, {stop}] mm must be finite with start < stop"
                )));
            }
            linspace(start, stop, n)
        }
        (None, None, None) => map.ys_mm.clone(),
        _ => {
            return Err(CliError::validation(
                "--y-start-mm, --y-stop-mm, and --n-positions must be given together",
            ))
        }
    };

    let pref = CouplingPrefactor {
        m_s: args.ms,
        v_s: args.vs,
        gyro_hz_per_t: args.gyro,
    };
    let entries = kappa_profile(&map, args.x_mm, args.radius_mm, &pref, &ys)
        .map_err(|e| CliError::validation(e.to_string()))?;

    let n_ok = entries.iter().filter(|e| e.outcome.is_ok()).count();
    println!(
        "fieldmap: {} positions ({} extracted, {} failed)",
        entries.len(),
        n_ok,
        entries.len() - n_ok
    );
    write_atomic(&args.out, &profile_csv(&entries))?;
    wrote(&args.out);

    if let Some(path) = &args.plot {
        render_plot(&profile_figure(&entries), &profile_spec(), path)?;
        wrote(path);
    }
    Ok(())
}

fn status_code(err: &FieldMapError) -> &'static str {
    match err {
        FieldMapError::FootprintClipped { .. } => "clipped",
        FieldMapError::EmptyFootprint { .. } => "empty_footprint",
        FieldMapError::OutOfBounds { .. } => "out_of_bounds",
        _ => "error",
    }
}

fn profile_csv(entries: &[ProfileEntry]) -> String {
    let mut out = String::from(
        "y_mm,status,g_r_hz,g_l_hz,kappa_r_hz,kappa_l_hz,chirality,spin_r,spin_l,n_samples\n",
    );
    for entry in entries {
        out.push_str(&fmt_e(entry.y_mm));
        match &entry.outcome {
            Ok(r) => {
                out.push_str(",ok,");
                for v in [
                    r.g_r_hz,
                    r.g_l_hz,
                    r.kappa_r_hz,
                    r.kappa_l_hz,
                    r.chirality,
                    r.spin_density_r,
                    r.spin_density_l,
                ] {
                    out.push_str(&fmt_e(v));
                    out.push(',');
                }
                out.push_str(&r.n_samples.to_string());
            }
            Err(e) => {
                out.push(',');
                out.push_str(status_code(e));
                out.push_str(",,,,,,,,");
            }
        }
        out.push('\n');
    }
    out
}

fn profile_figure(entries: &[ProfileEntry]) -> PlotData {
    let ok: Vec<(f64, &chimag_core::fieldmap::CouplingRates)> = entries
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok().map(|r| (e.y_mm, r)))
        .collect();
    let series = |label: &str, pick: fn(&chimag_core::fieldmap::CouplingRates) -> f64| Series {
        label: label.into(),
        x: ok.iter().map(|(y, _)| *y).collect(),
        y: ok.iter().map(|(_, r)| pick(r)).collect(),
    };
    PlotData::Lines(vec![
        series("kappa_R (MHz)", |r| r.kappa_r_hz * 1e-6),
        series("kappa_L (MHz)", |r| r.kappa_l_hz * 1e-6),
    ])
}

fn profile_spec() -> PlotSpec {
    PlotSpec {
        kind: PlotKind::Profile,
        title: "coupling rates vs position".into(),
        x_label: "transverse position (mm)".into(),
        y_label: "rate / 2pi (MHz)".into(),
        x_range: None,
        y_range: None,
    }
}
