//! Field-map CSV: one row per grid point, y-major, carrying the complex
//! transverse H-field for both propagation directions as re/im pairs.
//!
//! Header:
//! `x_mm,y_mm,hx_r_re,hx_r_im,hy_r_re,hy_r_im,hx_l_re,hx_l_im,hy_l_re,hy_l_im`

use num_complex::Complex64;
use thiserror::Error;

use crate::fieldmap::{FieldMap, FieldMapError};

const COLUMNS: [&str; 10] = [
    "x_mm", "y_mm", "hx_r_re", "hx_r_im", "hy_r_re", "hy_r_im", "hx_l_re", "hx_l_im", "hy_l_re",
    "hy_l_im",
];

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FieldMapCsvError {
    #[error("missing required column `{name}` (header has: {header})")]
    MissingColumn { name: &'static str, header: String },
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
    #[error("line {line}: duplicate grid point ({x_mm}, {y_mm})")]
    DuplicatePoint { line: usize, x_mm: f64, y_mm: f64 },
    #[error("incomplete grid: {got} rows for a {nx}x{ny} lattice ({expected} cells)")]
    IncompleteGrid {
        got: usize,
        nx: usize,
        ny: usize,
        expected: usize,
    },
    #[error("empty file: no header line")]
    NoHeader,
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Map(#[from] FieldMapError),
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses a field-map CSV; rows may arrive in any order but must tile a
/// complete rectangular grid with no duplicates.
pub fn read_fieldmap_csv(text: &str) -> Result<FieldMap, FieldMapCsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(FieldMapCsvError::NoHeader)?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    for (i, want) in COLUMNS.iter().enumerate() {
        match names.get(i) {
            Some(got) if got == want => {}
            _ => {
                return Err(FieldMapCsvError::MissingColumn {
                    name: want,
                    header: header.trim().to_string(),
                })
            }
        }
    }

    struct Row {
        line: usize,
        x: f64,
        y: f64,
        h: [Complex64; 4],
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != COLUMNS.len() {
            return Err(FieldMapCsvError::FieldCount {
                line: line_no,
                expected: COLUMNS.len(),
                got: fields.len(),
            });
        }
        let mut vals = [0.0; 10];
        for (i, tok) in fields.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| FieldMapCsvError::InvalidNumber {
                line: line_no,
                column: COLUMNS[i],
                token: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(FieldMapCsvError::InvalidNumber {
                    line: line_no,
                    column: COLUMNS[i],
                    token: tok.to_string(),
                });
            }
            vals[i] = v;
        }
        rows.push(Row {
            line: line_no,
            x: vals[0],
            y: vals[1],
            h: [
                Complex64::new(vals[2], vals[3]),
                Complex64::new(vals[4], vals[5]),
                Complex64::new(vals[6], vals[7]),
                Complex64::new(vals[8], vals[9]),
            ],
        });
    }
    if rows.is_empty() {
        return Err(FieldMapCsvError::Empty);
    }

    // Reconstruct the axes from the distinct coordinates.
    let mut xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let mut ys: Vec<f64> = rows.iter().map(|r| r.y).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let nx = xs.len();
    let ny = ys.len();
    if rows.len() != nx * ny {
        return Err(FieldMapCsvError::IncompleteGrid {
            got: rows.len(),
            nx,
            ny,
            expected: nx * ny,
        });
    }

    let index_of = |axis: &[f64], v: f64| axis.binary_search_by(|p| p.partial_cmp(&v).unwrap());
    let n = nx * ny;
    let mut hx_r = vec![Complex64::new(0.0, 0.0); n];
    let mut hy_r = hx_r.clone();
    let mut hx_l = hx_r.clone();
    let mut hy_l = hx_r.clone();
    let mut seen = vec![false; n];
    for row in &rows {
        // Coordinates came from the same lists, so lookups cannot fail.
        let ix = index_of(&xs, row.x).unwrap();
        let iy = index_of(&ys, row.y).unwrap();
        let cell = iy * nx + ix;
        if seen[cell] {
            return Err(FieldMapCsvError::DuplicatePoint {
                line: row.line,
                x_mm: row.x,
                y_mm: row.y,
            });
        }
        seen[cell] = true;
        hx_r[cell] = row.h[0];
        hy_r[cell] = row.h[1];
        hx_l[cell] = row.h[2];
        hy_l[cell] = row.h[3];
    }

    let map = FieldMap {
        xs_mm: xs,
        ys_mm: ys,
        hx_r,
        hy_r,
        hx_l,
        hy_l,
    };
    map.validate()?;
    Ok(map)
}

/// Serializes a field map y-major with 17 significant digits (lossless
/// round-trip).
pub fn write_fieldmap_csv(map: &FieldMap) -> String {
    let mut out = String::new();
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    let nx = map.nx();
    for (iy, &y) in map.ys_mm.iter().enumerate() {
        for (ix, &x) in map.xs_mm.iter().enumerate() {
            let cell = iy * nx + ix;
            let fields = [
                fmt17(x),
                fmt17(y),
                fmt17(map.hx_r[cell].re),
                fmt17(map.hx_r[cell].im),
                fmt17(map.hy_r[cell].re),
                fmt17(map.hy_r[cell].im),
                fmt17(map.hx_l[cell].re),
                fmt17(map.hx_l[cell].im),
                fmt17(map.hy_l[cell].re),
                fmt17(map.hy_l[cell].im),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldmap::synthetic_chiral_map;

    fn axis(start: f64, stop: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                start * (1.0 - t) + stop * t
            })
            .collect()
    }

    #[test]
    fn round_trip_is_exact() {
        let map = synthetic_chiral_map(axis(-4.0, 4.0, 9), axis(-2.0, 2.0, 7), 0.8, 1.5);
        let text = write_fieldmap_csv(&map);
        let back = read_fieldmap_csv(&text).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn rows_in_any_order_reassemble() {
        let map = synthetic_chiral_map(axis(0.0, 2.0, 3), axis(0.0, 1.0, 2), 0.5, 1.0);
        let text = write_fieldmap_csv(&map);
        let mut lines: Vec<&str> = text.lines().collect();
        let header = lines.remove(0);
        lines.reverse();
        let shuffled = format!("{header}\n{}\n", lines.join("\n"));
        let back = read_fieldmap_csv(&shuffled).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn structural_errors() {
        assert_eq!(read_fieldmap_csv(""), Err(FieldMapCsvError::NoHeader));

        let header = COLUMNS.join(",");
        assert_eq!(
            read_fieldmap_csv(&format!("{header}\n")),
            Err(FieldMapCsvError::Empty)
        );

        match read_fieldmap_csv("x_mm,y_mm,hx_r_re\n") {
            Err(FieldMapCsvError::MissingColumn {
                name: "hx_r_im", ..
            }) => {}
            other => panic!("expected missing-column error, got {other:?}"),
        }

        let short_row = format!("{header}\n0,0,1,0\n");
        assert!(matches!(
            read_fieldmap_csv(&short_row),
            Err(FieldMapCsvError::FieldCount {
                line: 2,
                got: 4,
                ..
            })
        ));

        let bad_num = format!("{header}\n0,0,1,0,0,x,0,0,0,0\n");
        assert!(matches!(
            read_fieldmap_csv(&bad_num),
            Err(FieldMapCsvError::InvalidNumber {
                column: "hy_r_im",
                ..
            })
        ));
    }

    #[test]
    fn duplicate_and_incomplete_grids() {
        let header = COLUMNS.join(",");
        let row = "0,0,1,0,0,0,1,0,0,0";
        let dup = format!("{header}\n{row}\n{row}\n");
        // Two identical coordinates collapse to a 1x1 lattice with 2 rows.
        assert!(matches!(
            read_fieldmap_csv(&dup),
            Err(FieldMapCsvError::IncompleteGrid {
                got: 2,
                nx: 1,
                ny: 1,
                ..
            })
        ));

        // 2x2 lattice with one corner missing and one duplicated: the
        // counts match, so the duplicate itself is caught.
        let cells = [
            "0,0,1,0,0,0,1,0,0,0",
            "1,0,1,0,0,0,1,0,0,0",
            "0,1,1,0,0,0,1,0,0,0",
            "0,1,1,0,0,0,1,0,0,0",
        ];
        let text = format!("{header}\n{}\n", cells.join("\n"));
        assert!(matches!(
            read_fieldmap_csv(&text),
            Err(FieldMapCsvError::DuplicatePoint { x_mm, y_mm: 1.0, .. }) if x_mm == 0.0
        ));
    }
}
