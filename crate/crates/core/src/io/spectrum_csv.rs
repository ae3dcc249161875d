//! Spectrum CSV: `f_hz,s11_db,s21_db,s12_db,s22_db` with optional trailing
//! `p21_deg,p12_deg` phase columns. Magnitudes are stored in dB; a file
//! without phase columns marks the spectrum magnitude-only.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{FrequencyGrid, ModelError, TwoPortSpectrum};

const BASE_COLUMNS: [&str; 5] = ["f_hz", "s11_db", "s21_db", "s12_db", "s22_db"];
const PHASE_COLUMNS: [&str; 2] = ["p21_deg", "p12_deg"];

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SpectrumCsvError {
    #[error("missing required column `{name}` (header has: {header})")]
    MissingColumn { name: &'static str, header: String },
    #[error("unexpected column `{name}` at position {position}")]
    UnexpectedColumn { name: String, position: usize },
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}, field `{column}`: invalid number `{token}`")]
    InvalidNumber {
        line: usize,
        column: &'static str,
        token: String,
    },
    #[error("line {line}: frequency {f_hz} Hz does not increase past {prev_hz} Hz")]
    NonIncreasingFrequency {
        line: usize,
        f_hz: f64,
        prev_hz: f64,
    },
    #[error("empty file: no header line")]
    NoHeader,
    #[error("need at least 2 data rows, got {rows}")]
    TooFewRows { rows: usize },
    #[error("frequency grid is not uniform: step at row {row} deviates by {deviation_rel:.2e} (relative)")]
    NonUniformGrid { row: usize, deviation_rel: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

fn linear_to_db(mag: f64) -> f64 {
    20.0 * mag.max(1e-300).log10()
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses spectrum CSV. The boolean is true when the file carried phase
/// columns; otherwise all phases are zero and only magnitudes are
/// trustworthy.
pub fn read_spectrum_csv(text: &str) -> Result<(TwoPortSpectrum, bool), SpectrumCsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(SpectrumCsvError::NoHeader)?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    for (i, want) in BASE_COLUMNS.iter().enumerate() {
        match names.get(i) {
            Some(got) if got == want => {}
            _ => {
                return Err(SpectrumCsvError::MissingColumn {
                    name: want,
                    header: header.trim().to_string(),
                })
            }
        }
    }
    let has_phase = match names.len() {
        5 => false,
        7 if names[5] == PHASE_COLUMNS[0] && names[6] == PHASE_COLUMNS[1] => true,
        _ => {
            // Either a half-present phase pair or stray columns.
            if names.len() == 6 || (names.len() == 7 && names[5] == PHASE_COLUMNS[0]) {
                return Err(SpectrumCsvError::MissingColumn {
                    name: if names.get(5) == Some(&PHASE_COLUMNS[0]) {
                        PHASE_COLUMNS[1]
                    } else {
                        PHASE_COLUMNS[0]
                    },
                    header: header.trim().to_string(),
                });
            }
            return Err(SpectrumCsvError::UnexpectedColumn {
                name: names[5].to_string(),
                position: 6,
            });
        }
    };
    let expected = names.len();
    let column_names: &[&str] = if has_phase {
        &[
            "f_hz", "s11_db", "s21_db", "s12_db", "s22_db", "p21_deg", "p12_deg",
        ]
    } else {
        &BASE_COLUMNS
    };

    let mut f = Vec::new();
    let mut s11 = Vec::new();
    let mut s21 = Vec::new();
    let mut s12 = Vec::new();
    let mut s22 = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != expected {
            return Err(SpectrumCsvError::FieldCount {
                line: line_no,
                expected,
                got: fields.len(),
            });
        }
        let mut vals = vec![0.0; expected];
        for (i, tok) in fields.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| SpectrumCsvError::InvalidNumber {
                line: line_no,
                column: column_names[i],
                token: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(SpectrumCsvError::InvalidNumber {
                    line: line_no,
                    column: column_names[i],
                    token: tok.to_string(),
                });
            }
            vals[i] = v;
        }
        if let Some(&prev) = f.last() {
            if vals[0] <= prev {
                return Err(SpectrumCsvError::NonIncreasingFrequency {
                    line: line_no,
                    f_hz: vals[0],
                    prev_hz: prev,
                });
            }
        }
        f.push(vals[0]);
        let (p21, p12) = if has_phase {
            (vals[5].to_radians(), vals[6].to_radians())
        } else {
            (0.0, 0.0)
        };
        s11.push(Complex64::new(db_to_linear(vals[1]), 0.0));
        s21.push(Complex64::from_polar(db_to_linear(vals[2]), p21));
        s12.push(Complex64::from_polar(db_to_linear(vals[3]), p12));
        s22.push(Complex64::new(db_to_linear(vals[4]), 0.0));
    }

    let n = f.len();
    if n < 2 {
        return Err(SpectrumCsvError::TooFewRows { rows: n });
    }
    let step = (f[n - 1] - f[0]) / (n - 1) as f64;
    for (row, pair) in f.windows(2).enumerate() {
        let deviation_rel = ((pair[1] - pair[0] - step) / step).abs();
        if deviation_rel > 1e-6 {
            return Err(SpectrumCsvError::NonUniformGrid {
                row: row + 1,
                deviation_rel,
            });
        }
    }
    let grid = FrequencyGrid::new(f[0], f[n - 1], n)?;
    Ok((TwoPortSpectrum::new(grid, s11, s21, s12, s22)?, has_phase))
}

/// Serializes a spectrum to CSV; `include_phase` adds the transmission
/// phase columns in degrees.
pub fn write_spectrum_csv(spec: &TwoPortSpectrum, include_phase: bool) -> String {
    let mut out = String::new();
    out.push_str(&BASE_COLUMNS.join(","));
    if include_phase {
        out.push(',');
        out.push_str(&PHASE_COLUMNS.join(","));
    }
    out.push('\n');
    for k in 0..spec.len() {
        let mut fields = vec![
            fmt17(spec.grid.sample(k)),
            fmt17(linear_to_db(spec.s11[k].norm())),
            fmt17(linear_to_db(spec.s21[k].norm())),
            fmt17(linear_to_db(spec.s12[k].norm())),
            fmt17(linear_to_db(spec.s22[k].norm())),
        ];
        if include_phase {
            fields.push(fmt17(spec.s21[k].arg().to_degrees()));
            fields.push(fmt17(spec.s12[k].arg().to_degrees()));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
