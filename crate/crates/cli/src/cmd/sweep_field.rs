//! `sweep-field`: retune the scenario's resonator across a bias-field
//! range and map transmission (dB) and isolation over field x frequency.

use std::path::PathBuf;

use chimag_core::model::{field_sweep_map, FieldSweepMap, MagnetConfig};

use super::{fmt_e, linspace, load_scenario_file, wrote};
use crate::output::write_atomic;
use crate::plot::{render_plot, PlotData, PlotKind, PlotSpec};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct SweepFieldArgs {
    /// Scenario description (TOML); must hold exactly one resonator, whose
    /// coupling rates stay fixed across the sweep
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// First bias field (T)
    #[arg(long, value_name = "TESLA", allow_negative_numbers = true)]
    pub b_start_t: f64,
    /// Last bias field (T)
    #[arg(long, value_name = "TESLA", allow_negative_numbers = true)]
    pub b_stop_t: f64,
    /// Number of bias points (>= 2, endpoints included)
    #[arg(long, value_name = "N")]
    pub n_fields: usize,
    /// Long-format map CSV to write (b_t, f_m_hz, f_hz, s21_db, s12_db, iso_db)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Render the |S21| map as an SVG heatmap
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
}

pub fn run(args: &SweepFieldArgs) -> Result<(), CliError> {
    if args.n_fields < 2 {
        return Err(CliError::validation(format!(
            "--n-fields = {}, a sweep needs at least 2 bias points",
            args.n_fields
        )));
    }
    if !(args.b_start_t.is_finite() && args.b_stop_t.is_finite() && args.b_start_t < args.b_stop_t)
    {
        return Err(CliError::validation(format!(
            "bias range [{}, {}] T must be finite with start < stop",
            args.b_start_t, args.b_stop_t
        )));
    }
    let config = load_scenario_file(&args.config)?;
    if config.resonators.len() != 1 {
        return Err(CliError::validation(format!(
            "the field sweep retunes a single resonator; the scenario has {}",
            config.resonators.len()
        )));
    }

    let mags: Vec<MagnetConfig> = linspace(args.b_start_t, args.b_stop_t, args.n_fields)
        .into_iter()
        .map(|b_t| MagnetConfig {
            b_t,
            ..config.magnet
        })
        .collect();
    let map = field_sweep_map(&mags, &config.resonators[0].params, &config.sweep)
        .map_err(|e| CliError::validation(e.to_string()))?;

    println!(
        "sweep-field: {} bias points x {} frequencies",
        map.b_values_t.len(),
        map.grid.len()
    );
    write_atomic(&args.out, &map_csv(&map))?;
    wrote(&args.out);

    if let Some(path) = &args.plot {
        let data = PlotData::Grid {
            x: map.grid.iter().map(|f| f * 1e-9).collect(),
            y: map.b_values_t.clone(),
            z: map.s21_db.clone(),
        };
        let spec = PlotSpec {
            kind: PlotKind::Heatmap,
            title: "|S21| vs bias field".into(),
            x_label: "frequency (GHz)".into(),
            y_label: "bias field (T)".into(),
            x_range: None,
            y_range: None,
        };
        render_plot(&data, &spec, path)?;
        wrote(path);
    }
    Ok(())
}

fn map_csv(map: &FieldSweepMap) -> String {
    let mut out = String::from("b_t,f_m_hz,f_hz,s21_db,s12_db,iso_db\n");
    for row in 0..map.b_values_t.len() {
        for (col, f) in map.grid.iter().enumerate() {
            for (i, v) in [
                map.b_values_t[row],
                map.f_m_hz[row],
                f,
                map.s21_db[row][col],
                map.s12_db[row][col],
                map.iso_db[row][col],
            ]
            .iter()
            .enumerate()
            {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&fmt_e(*v));
            }
            out.push('\n');
        }
    }
    out
}
