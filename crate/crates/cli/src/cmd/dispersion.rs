//! `dispersion`: tabulate the slow-wave dispersion (propagation constant
//! and group velocity) of a grooved waveguide up to its cutoff.

use std::path::PathBuf;

use chimag_core::dispersion::{dispersion_curve, DispersionCurve, GrooveGeometry};

use super::{fmt_e, wrote};
use crate::output::write_atomic;
use crate::plot::{render_plot, PlotData, PlotKind, PlotSpec, Series};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct DispersionArgs {
    /// Groove period (mm)
    #[arg(long, value_name = "MM")]
    pub p_mm: f64,
    /// Groove depth (mm); sets the cutoff frequency
    #[arg(long, value_name = "MM")]
    pub h_mm: f64,
    /// Groove width (mm); defaults to half the period
    #[arg(long, value_name = "MM")]
    pub a_mm: Option<f64>,
    /// Table CSV to write (f_hz, beta_rad_per_m, v_g_m_per_s)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// First frequency (GHz); defaults to 5% of cutoff
    #[arg(long, value_name = "GHZ")]
    pub f_start_ghz: Option<f64>,
    /// Last frequency (GHz); defaults to 99.9% of cutoff
    #[arg(long, value_name = "GHZ")]
    pub f_stop_ghz: Option<f64>,
    /// Number of samples (endpoints included)
    #[arg(long, value_name = "N", default_value_t = 200)]
    pub n_points: usize,
    /// Render the dispersion curve as an SVG figure
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
}

pub fn run(args: &DispersionArgs) -> Result<(), CliError> {
    let geom = match args.a_mm {
        Some(a_mm) => GrooveGeometry {
            p_mm: args.p_mm,
            h_mm: args.h_mm,
            a_mm,
        },
        None => GrooveGeometry::with_default_width(args.p_mm, args.h_mm),
    };
    geom.validate()
        .map_err(|e| CliError::validation(e.to_string()))?;
    let cutoff = geom.cutoff_hz();
    let f_start = args.f_start_ghz.map_or(0.05 * cutoff, |g| g * 1e9);
    let f_stop = args.f_stop_ghz.map_or(0.999 * cutoff, |g| g * 1e9);
    let curve = dispersion_curve(f_start, f_stop, args.n_points, &geom)
        .map_err(|e| CliError::validation(e.to_string()))?;

    println!(
        "dispersion: cutoff {:.6} GHz, {} samples up to {:.6} GHz",
        cutoff * 1e-9,
        curve.f_hz.len(),
        f_stop * 1e-9
    );
    write_atomic(&args.out, &curve_csv(&curve))?;
    wrote(&args.out);

    if let Some(path) = &args.plot {
        let data = PlotData::Lines(vec![Series {
            label: "beta (rad/m)".into(),
            x: curve.f_hz.iter().map(|f| f * 1e-9).collect(),
            y: curve.beta.clone(),
        }]);
        let spec = PlotSpec {
            kind: PlotKind::Profile,
            title: "slow-wave dispersion".into(),
            x_label: "frequency (GHz)".into(),
            y_label: "beta (rad/m)".into(),
            x_range: None,
            y_range: None,
        };
        render_plot(&data, &spec, path)?;
        wrote(path);
    }
    Ok(())
}

fn curve_csv(curve: &DispersionCurve) -> String {
    let mut out = String::from("f_hz,beta_rad_per_m,v_g_m_per_s\n");
    for k in 0..curve.f_hz.len() {
        out.push_str(&fmt_e(curve.f_hz[k]));
        out.push(',');
        out.push_str(&fmt_e(curve.beta[k]));
        out.push(',');
        out.push_str(&fmt_e(curve.v_g[k]));
        out.push('\n');
    }
    out
}
