//! `fit`: extract resonator parameters from a measured spectrum
//! (Touchstone or spectrum CSV) and write a structured text report,
//! optionally with the fitted curve and an overlay figure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chimag_core::fitting::{
    fit_resonator, initial_guess, model_spectrum, ComponentMask, FitProblem, FitResult,
};
use chimag_core::io::write_spectrum_csv;
use chimag_core::model::{critical_detuning_check, TwoPortSpectrum};

use super::{load_input_spectrum, wrote};
use crate::output::write_atomic;
use crate::plot::{render_plot, PlotData, PlotKind, PlotSpec, Series};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Measured spectrum: .s2p (Touchstone) or .csv (spectrum CSV)
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Text report to write
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    /// Comma-separated S-parameters entering the residuals
    #[arg(long, value_name = "LIST", default_value = "s21,s12", value_parser = parse_components)]
    pub components: ComponentsArg,
    /// Trust the stored phases and fit complex residuals instead of
    /// magnitudes
    #[arg(long)]
    pub phase_known: bool,
    /// Iteration budget for the damped least-squares loop
    #[arg(long, value_name = "N")]
    pub max_iter: Option<usize>,
    /// Also free the affine background (offset and slope)
    #[arg(long)]
    pub free_background: bool,
    /// Write the fitted model evaluated on the data grid as spectrum CSV
    #[arg(long, value_name = "FILE")]
    pub curve: Option<PathBuf>,
    /// Render a data-vs-fit overlay figure
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
}

/// Parsed `--components` list (clap needs a named Clone type).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentsArg(pub ComponentMask);

fn parse_components(s: &str) -> Result<ComponentsArg, String> {
    let mut mask = ComponentMask {
        s11: false,
        s21: false,
        s12: false,
        s22: false,
    };
    for token in s.split(',') {
        match token.trim().to_ascii_lowercase().as_str() {
            "s11" => mask.s11 = true,
            "s21" => mask.s21 = true,
            "s12" => mask.s12 = true,
            "s22" => mask.s22 = true,
            other => {
                return Err(format!(
                    "unknown S-parameter `{other}` (use s11,s21,s12,s22)"
                ))
            }
        }
    }
    if !(mask.s11 || mask.s21 || mask.s12 || mask.s22) {
        return Err("at least one S-parameter is required".into());
    }
    Ok(ComponentsArg(mask))
}

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    let (data, has_phase) = load_input_spectrum(&args.input)?;
    if args.phase_known && !has_phase {
        return Err(CliError::validation(format!(
            "`{}` carries no phase information; --phase-known needs complex data",
            args.input.display()
        )));
    }

    let mut problem = FitProblem::new(&data);
    problem.components = args.components.0;
    problem.phase_known = args.phase_known;
    if let Some(n) = args.max_iter {
        problem.max_iter = n;
    }
    if args.free_background {
        problem.free.bg_offset = true;
        problem.free.bg_slope = true;
    }

    let start = initial_guess(&data).map_err(|e| CliError::validation(e.to_string()))?;
    let fit = fit_resonator(&problem, &start).map_err(|e| CliError::validation(e.to_string()))?;

    if fit.converged {
        println!("fit: converged in {} iterations", fit.n_iter);
    } else {
        println!("fit: did not converge within {} iterations", fit.n_iter);
    }

    write_atomic(&args.report, &report_text(&args.input, &problem, &fit))?;
    wrote(&args.report);

    if args.curve.is_some() || args.plot.is_some() {
        let curve = model_spectrum(&fit.resonator, &fit.background, &data.grid)
            .map_err(|e| CliError::runtime(format!("fitted model evaluation failed: {e}")))?;
        if let Some(path) = &args.curve {
            write_atomic(path, &write_spectrum_csv(&curve, true))?;
            wrote(path);
        }
        if let Some(path) = &args.plot {
            render_plot(&overlay(&data, &curve), &overlay_spec(), path)?;
            wrote(path);
        }
    }
    Ok(())
}

fn report_text(input: &Path, problem: &FitProblem, fit: &FitResult) -> String {
    let mask = problem.components;
    let names: Vec<&str> = [
        (mask.s11, "s11"),
        (mask.s21, "s21"),
        (mask.s12, "s12"),
        (mask.s22, "s22"),
    ]
    .iter()
    .filter_map(|&(on, name)| on.then_some(name))
    .collect();

    let mut s = String::new();
    let _ = writeln!(s, "resonator fit report");
    let _ = writeln!(
        s,
        "  input:          {}",
        input.file_name().map_or_else(
            || input.display().to_string(),
            |n| n.to_string_lossy().into_owned()
        )
    );
    let _ = writeln!(s, "  points:         {}", problem.data.len());
    let _ = writeln!(s, "  components:     {}", names.join(", "));
    let _ = writeln!(
        s,
        "  residuals:      {}",
        if problem.phase_known {
            "complex (phase known)"
        } else {
            "magnitude only"
        }
    );
    let _ = writeln!(
        s,
        "  converged:      {} ({} iterations)",
        if fit.converged { "yes" } else { "no" },
        fit.n_iter
    );
    let _ = writeln!(s, "  residual norm:  {:.6e}", fit.residual_norm);
    let _ = writeln!(
        s,
        "  rank deficient: {}",
        if fit.rank_deficient { "yes" } else { "no" }
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "  parameter           value        1-sigma");

    let p = &fit.resonator;
    let row = |s: &mut String, name: &str, unit: &str, value: f64, sigma: Option<f64>| {
        let sigma = match sigma {
            Some(v) if v.is_finite() => format!("{v:14.6}"),
            Some(_) => format!("{:>14}", "inf"),
            None => format!("{:>14}", "(fixed)"),
        };
        let _ = writeln!(s, "  {name:<9}{unit:<7}{value:14.6}{sigma}");
    };
    row(
        &mut s,
        "f_m",
        "(GHz)",
        p.f_m_hz * 1e-9,
        fit.stderr.f_m_hz.map(|v| v * 1e-9),
    );
    row(
        &mut s,
        "gamma_i",
        "(MHz)",
        p.gamma_i_hz * 1e-6,
        fit.stderr.gamma_i_hz.map(|v| v * 1e-6),
    );
    row(
        &mut s,
        "kappa_R",
        "(MHz)",
        p.kappa_r_hz * 1e-6,
        fit.stderr.kappa_r_hz.map(|v| v * 1e-6),
    );
    row(
        &mut s,
        "kappa_L",
        "(MHz)",
        p.kappa_l_hz * 1e-6,
        fit.stderr.kappa_l_hz.map(|v| v * 1e-6),
    );
    row(
        &mut s,
        "bg_offset",
        "",
        fit.background.offset,
        fit.stderr.bg_offset,
    );
    row(
        &mut s,
        "bg_slope",
        "",
        fit.background.slope,
        fit.stderr.bg_slope,
    );

    let _ = writeln!(s);
    let sum = p.kappa_r_hz + p.kappa_l_hz;
    if sum > 0.0 {
        let _ = writeln!(
            s,
            "  chirality C:    {:.6}",
            (p.kappa_r_hz - p.kappa_l_hz) / sum
        );
    } else {
        let _ = writeln!(s, "  chirality C:    n/a (no coupling)");
    }
    let crit = critical_detuning_check(p);
    let _ = writeln!(
        s,
        "  critical target: kappa_R = 2*gamma_i = {:.6} MHz",
        crit.kappa_r_critical_hz * 1e-6
    );
    let _ = writeln!(
        s,
        "  critical gap:    {:+.6} MHz ({})",
        crit.gap_hz * 1e-6,
        if crit.is_critical {
            "critical"
        } else if crit.gap_hz > 0.0 {
            "overcoupled"
        } else {
            "undercoupled"
        }
    );
    s
}

fn overlay(data: &TwoPortSpectrum, curve: &TwoPortSpectrum) -> PlotData {
    let f_ghz: Vec<f64> = data.grid.iter().map(|f| f * 1e-9).collect();
    let db = |v: f64| 20.0 * v.log10();
    let mk = |label: &str, mags: Vec<f64>| Series {
        label: label.into(),
        x: f_ghz.clone(),
        y: mags,
    };
    PlotData::Lines(vec![
        mk(
            "data |S21|",
            data.s21.iter().map(|s| db(s.norm())).collect(),
        ),
        mk(
            "fit |S21|",
            curve.s21.iter().map(|s| db(s.norm())).collect(),
        ),
        mk(
            "data |S12|",
            data.s12.iter().map(|s| db(s.norm())).collect(),
        ),
        mk(
            "fit |S12|",
            curve.s12.iter().map(|s| db(s.norm())).collect(),
        ),
    ])
}

fn overlay_spec() -> PlotSpec {
    PlotSpec {
        kind: PlotKind::Spectrum,
        title: "fit overlay".into(),
        x_label: "frequency (GHz)".into(),
        y_label: "magnitude (dB)".into(),
        x_range: None,
        y_range: None,
    }
}
