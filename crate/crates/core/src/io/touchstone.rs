//! Touchstone v1 two-port (.s2p) reader and writer. Data rows carry
//! `f S11 S21 S12 S22` with each S as a pair of reals in the declared
//! format; v2 files are rejected up front.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{FrequencyGrid, ModelError, TwoPortSpectrum};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TouchstoneError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: frequency {f_hz} Hz does not increase past {prev_hz} Hz")]
    NonIncreasingFrequency {
        line: usize,
        f_hz: f64,
        prev_hz: f64,
    },
    #[error("Touchstone v2 keyword at line {line}; only v1 is supported")]
    V2Unsupported { line: usize },
    #[error("no data rows")]
    Empty,
    #[error("need at least 2 rows to form a spectrum, got {rows}")]
    TooFewRows { rows: usize },
    #[error("frequency grid is not uniform: step at row {row} deviates by {deviation_rel:.2e} (relative)")]
    NonUniformGrid { row: usize, deviation_rel: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Number format of the 8 S-parameter reals per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TouchstoneFormat {
    /// Real/imaginary pairs.
    Ri,
    /// Magnitude and angle in degrees.
    Ma,
    /// 20*log10(magnitude) and angle in degrees.
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn multiplier(&self) -> f64 {
        match self {
            FrequencyUnit::Hz => 1.0,
            FrequencyUnit::KHz => 1e3,
            FrequencyUnit::MHz => 1e6,
            FrequencyUnit::GHz => 1e9,
        }
    }
}

/// One data row, already converted to complex S-parameters in file order
/// S11 S21 S12 S22 and frequency in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchstoneRow {
    pub f_hz: f64,
    pub s: [Complex64; 4],
}

/// A parsed .s2p file: option-line settings, preserved comments, and
/// converted data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneDocument {
    pub unit: FrequencyUnit,
    pub format: TouchstoneFormat,
    pub resistance_ohm: f64,
    pub comments: Vec<String>,
    pub rows: Vec<TouchstoneRow>,
}

fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for tok in line.split_whitespace() {
        let start = line[cursor..].find(tok).unwrap() + cursor;
        out.push((start + 1, tok));
        cursor = start + tok.len();
    }
    out
}

fn parse_real(line_no: usize, column: usize, tok: &str) -> Result<f64, TouchstoneError> {
    let v: f64 = tok.parse().map_err(|_| TouchstoneError::Syntax {
        line: line_no,
        column,
        message: format!("invalid number `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(TouchstoneError::Syntax {
            line: line_no,
            column,
            message: format!("non-finite value `{tok}`"),
        });
    }
    Ok(v)
}

fn to_complex(format: TouchstoneFormat, a: f64, b: f64) -> Complex64 {
    match format {
        TouchstoneFormat::Ri => Complex64::new(a, b),
        TouchstoneFormat::Ma => Complex64::from_polar(a, b.to_radians()),
        TouchstoneFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

impl TouchstoneDocument {
    /// Parses v1 .s2p content. Option-line defaults (GHz, MA, 50 Ohm) apply
    /// to any token the file omits, per the format's conventions.
    pub fn parse(text: &str) -> Result<Self, TouchstoneError> {
        let mut doc = TouchstoneDocument {
            unit: FrequencyUnit::GHz,
            format: TouchstoneFormat::Ma,
            resistance_ohm: 50.0,
            comments: Vec::new(),
            rows: Vec::new(),
        };
        let mut saw_option_line = false;

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            // An inline `!` starts a comment.
            let (content, comment) = match raw_line.find('!') {
                Some(p) => (&raw_line[..p], Some(&raw_line[p + 1..])),
                None => (raw_line, None),
            };
            if let Some(c) = comment {
                doc.comments.push(c.to_string());
            }
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            if trimmed.starts_with('[') {
                return Err(TouchstoneError::V2Unsupported { line: line_no });
            }
            if trimmed.starts_with('#') {
                let hash = content.find('#').unwrap();
                let rest = &content[hash + 1..];
                if saw_option_line {
                    return Err(TouchstoneError::Syntax {
                        line: line_no,
                        column: 1,
                        message: "second option line".into(),
                    });
                }
                if !doc.rows.is_empty() {
                    return Err(TouchstoneError::Syntax {
                        line: line_no,
                        column: 1,
                        message: "option line after data rows".into(),
                    });
                }
                saw_option_line = true;
                let toks: Vec<(usize, &str)> = tokens_with_columns(rest)
                    .into_iter()
                    .map(|(col, tok)| (col + hash + 1, tok))
                    .collect();
                let mut i = 0;
                while i < toks.len() {
                    let (col, tok) = toks[i];
                    match tok.to_ascii_uppercase().as_str() {
                        "HZ" => doc.unit = FrequencyUnit::Hz,
                        "KHZ" => doc.unit = FrequencyUnit::KHz,
                        "MHZ" => doc.unit = FrequencyUnit::MHz,
                        "GHZ" => doc.unit = FrequencyUnit::GHz,
                        "RI" => doc.format = TouchstoneFormat::Ri,
                        "MA" => doc.format = TouchstoneFormat::Ma,
                        "DB" => doc.format = TouchstoneFormat::Db,
                        "S" => {}
                        "Y" | "Z" | "G" | "H" => {
                            return Err(TouchstoneError::Syntax {
                                line: line_no,
                                column: col,
                                message: format!("parameter `{tok}` not supported, only S"),
                            })
                        }
                        "R" => {
                            i += 1;
                            let (rcol, rtok) =
                                toks.get(i).copied().ok_or(TouchstoneError::Syntax {
                                    line: line_no,
                                    column: col,
                                    message: "R without a resistance value".into(),
                                })?;
                            doc.resistance_ohm = parse_real(line_no, rcol, rtok)?;
                        }
                        _ => {
                            return Err(TouchstoneError::Syntax {
                                line: line_no,
                                column: col,
                                message: format!("unknown option token `{tok}`"),
                            })
                        }
                    }
                    i += 1;
                }
                continue;
            }

            // Data row: frequency plus 8 reals.
            let toks = tokens_with_columns(content);
            if toks.len() != 9 {
                let column = if toks.len() > 9 {
                    toks[9].0
                } else {
                    content.trim_end().len() + 1
                };
                return Err(TouchstoneError::Syntax {
                    line: line_no,
                    column,
                    message: format!("expected 9 values per two-port row, got {}", toks.len()),
                });
            }
            let mut vals = [0.0; 9];
            for (slot, (col, tok)) in toks.iter().enumerate() {
                vals[slot] = parse_real(line_no, *col, tok)?;
            }
            let f_hz = vals[0] * doc.unit.multiplier();
            if let Some(last) = doc.rows.last() {
                if f_hz <= last.f_hz {
                    return Err(TouchstoneError::NonIncreasingFrequency {
                        line: line_no,
                        f_hz,
                        prev_hz: last.f_hz,
                    });
                }
            }
            doc.rows.push(TouchstoneRow {
                f_hz,
                s: [
                    to_complex(doc.format, vals[1], vals[2]),
                    to_complex(doc.format, vals[3], vals[4]),
                    to_complex(doc.format, vals[5], vals[6]),
                    to_complex(doc.format, vals[7], vals[8]),
                ],
            });
        }
        if doc.rows.is_empty() {
            return Err(TouchstoneError::Empty);
        }
        Ok(doc)
    }

    /// Converts to a spectrum; the rows must form a uniform grid (relative
    /// step deviation below 1e-6).
    pub fn to_spectrum(&self) -> Result<TwoPortSpectrum, TouchstoneError> {
        let n = self.rows.len();
        if n < 2 {
            return Err(TouchstoneError::TooFewRows { rows: n });
        }
        let step = (self.rows[n - 1].f_hz - self.rows[0].f_hz) / (n - 1) as f64;
        for (row, pair) in self.rows.windows(2).enumerate() {
            let local = pair[1].f_hz - pair[0].f_hz;
            let deviation_rel = ((local - step) / step).abs();
            if deviation_rel > 1e-6 {
                return Err(TouchstoneError::NonUniformGrid {
                    row: row + 1,
                    deviation_rel,
                });
            }
        }
        let grid = FrequencyGrid::new(self.rows[0].f_hz, self.rows[n - 1].f_hz, n)?;
        Ok(TwoPortSpectrum::new(
            grid,
            self.rows.iter().map(|r| r.s[0]).collect(),
            self.rows.iter().map(|r| r.s[1]).collect(),
            self.rows.iter().map(|r| r.s[2]).collect(),
            self.rows.iter().map(|r| r.s[3]).collect(),
        )?)
    }
}

/// Parses v1 .s2p text straight to a spectrum (uniform grid required).
pub fn parse_touchstone(text: &str) -> Result<TwoPortSpectrum, TouchstoneError> {
    TouchstoneDocument::parse(text)?.to_spectrum()
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn from_complex(format: TouchstoneFormat, s: Complex64) -> (f64, f64) {
    match format {
        TouchstoneFormat::Ri => (s.re, s.im),
        TouchstoneFormat::Ma => (s.norm(), s.arg().to_degrees()),
        // A true zero has no finite dB value; clamp keeps the file parseable
        // and reproduces 0 within 1e-12 absolute on read-back.
        TouchstoneFormat::Db => (20.0 * s.norm().max(1e-300).log10(), s.arg().to_degrees()),
    }
}

/// Serializes a spectrum as v1 .s2p with frequencies in Hz and 17
/// significant digits, which round-trips losslessly in RI format.
pub fn write_touchstone(spec: &TwoPortSpectrum, format: TouchstoneFormat) -> String {
    let fmt_tag = match format {
        TouchstoneFormat::Ri => "RI",
        TouchstoneFormat::Ma => "MA",
        TouchstoneFormat::Db => "DB",
    };
    let mut out = String::new();
    out.push_str(&format!("# Hz S {fmt_tag} R 50\n"));
    for k in 0..spec.len() {
        let mut fields = vec![fmt17(spec.grid.sample(k))];
        for s in [spec.s11[k], spec.s21[k], spec.s12[k], spec.s22[k]] {
            let (a, b) = from_complex(format, s);
            fields.push(fmt17(a));
            fields.push(fmt17(b));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}
