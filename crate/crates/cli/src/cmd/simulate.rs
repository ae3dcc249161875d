//! `simulate`: run one scenario through the element chain and export the
//! composite spectrum as CSV, Touchstone, absorption table, and/or SVG.

use std::path::PathBuf;

use chimag_core::cascade::{cascade, CascadeError};
use chimag_core::io::{write_spectrum_csv, write_touchstone};
use chimag_core::model::{absorption, TwoPortSpectrum};

use super::{fmt_e, load_scenario_file, parse_axis_range, wrote, FormatArg};
use crate::output::write_atomic;
use crate::plot::{render_plot, PlotData, PlotKind, PlotSpec, Series};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Scenario description (TOML)
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Spectrum CSV to write (dB magnitudes plus transmission phases)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write an absorption table (f_hz, a21, a12)
    #[arg(long, value_name = "FILE")]
    pub absorption: Option<PathBuf>,
    /// Also export the composite S-matrix as a Touchstone two-port file
    #[arg(long, value_name = "FILE")]
    pub touchstone: Option<PathBuf>,
    /// Touchstone number format
    #[arg(long, value_enum, default_value_t = FormatArg::Ri)]
    pub format: FormatArg,
    /// Render an SVG figure of the composite response
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
    /// What the figure shows
    #[arg(long, value_enum, default_value_t = PlotKindArg::Absorption)]
    pub plot_kind: PlotKindArg,
    /// Figure x-axis override, in the plot's x unit (GHz)
    #[arg(long, value_name = "MIN:MAX", allow_hyphen_values = true, value_parser = parse_axis_range)]
    pub x_range: Option<(f64, f64)>,
    /// Figure y-axis override, in the plot's y unit
    #[arg(long, value_name = "MIN:MAX", allow_hyphen_values = true, value_parser = parse_axis_range)]
    pub y_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKindArg {
    /// dB magnitudes of S21, S12, S11
    Spectrum,
    /// Transmission phases (radians)
    Phase,
    /// Directional absorption A21, A12
    Absorption,
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let config = load_scenario_file(&args.config)?;
    let chain = config.build_chain();
    let spectrum = cascade(&chain, &config.sweep).map_err(|e| match e {
        CascadeError::Empty => CliError::validation("scenario produces an empty element chain"),
        other => CliError::runtime(format!("cascade failed: {other}")),
    })?;

    println!(
        "simulate: {} element{} over {} points",
        chain.len(),
        if chain.len() == 1 { "" } else { "s" },
        spectrum.len()
    );

    write_atomic(&args.out, &write_spectrum_csv(&spectrum, true))?;
    wrote(&args.out);

    if let Some(path) = &args.absorption {
        write_atomic(path, &absorption_csv(&spectrum))?;
        wrote(path);
    }
    if let Some(path) = &args.touchstone {
        write_atomic(path, &write_touchstone(&spectrum, args.format.into()))?;
        wrote(path);
    }
    if let Some(path) = &args.plot {
        let (data, spec) = figure(&spectrum, args);
        render_plot(&data, &spec, path)?;
        wrote(path);
    }
    Ok(())
}

fn absorption_csv(spectrum: &TwoPortSpectrum) -> String {
    let (a21, a12) = absorption(spectrum);
    let mut out = String::from("f_hz,a21,a12\n");
    for k in 0..spectrum.len() {
        out.push_str(&fmt_e(spectrum.grid.sample(k)));
        out.push(',');
        out.push_str(&fmt_e(a21[k]));
        out.push(',');
        out.push_str(&fmt_e(a12[k]));
        out.push('\n');
    }
    out
}

fn figure(spectrum: &TwoPortSpectrum, args: &SimulateArgs) -> (PlotData, PlotSpec) {
    let f_ghz: Vec<f64> = spectrum.grid.iter().map(|f| f * 1e-9).collect();
    let db = |v: f64| 20.0 * v.log10();
    let (series, kind, title, y_label) = match args.plot_kind {
        PlotKindArg::Spectrum => (
            vec![
                series("|S21|", &f_ghz, spectrum.s21.iter().map(|s| db(s.norm()))),
                series("|S12|", &f_ghz, spectrum.s12.iter().map(|s| db(s.norm()))),
                series("|S11|", &f_ghz, spectrum.s11.iter().map(|s| db(s.norm()))),
            ],
            PlotKind::Spectrum,
            "composite spectrum",
            "magnitude (dB)",
        ),
        PlotKindArg::Phase => (
            vec![
                series("arg S21", &f_ghz, spectrum.s21.iter().map(|s| s.arg())),
                series("arg S12", &f_ghz, spectrum.s12.iter().map(|s| s.arg())),
            ],
            PlotKind::Phase,
            "transmission phase",
            "phase (rad)",
        ),
        PlotKindArg::Absorption => {
            let (a21, a12) = absorption(spectrum);
            (
                vec![
                    series("A21", &f_ghz, a21.into_iter()),
                    series("A12", &f_ghz, a12.into_iter()),
                ],
                PlotKind::Absorption,
                "directional absorption",
                "absorption",
            )
        }
    };
    (
        PlotData::Lines(series),
        PlotSpec {
            kind,
            title: title.into(),
            x_label: "frequency (GHz)".into(),
            y_label: y_label.into(),
            x_range: args.x_range,
            y_range: args.y_range,
        },
    )
}

fn series(label: &str, x: &[f64], y: impl Iterator<Item = f64>) -> Series {
    Series {
        label: label.into(),
        x: x.to_vec(),
        y: y.collect(),
    }
}
