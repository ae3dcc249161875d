//! Minimal deterministic SVG rendering: axes, tick grids, polylines, and
//! heat cells. Identical inputs produce byte-identical files -- no
//! timestamps, no randomness, fixed ordering throughout.

use std::fmt::Write as _;
use std::path::Path;

use crate::output::write_atomic;
use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 5] = ["#1565c0", "#c62828", "#2e7d32", "#6a1b9a", "#ef6c00"];

/// Five-stop dark-to-bright colormap for heat cells.
const HEAT_STOPS: [[f64; 3]; 5] = [
    [0x44 as f64, 0x01 as f64, 0x54 as f64],
    [0x3b as f64, 0x52 as f64, 0x8b as f64],
    [0x21 as f64, 0x91 as f64, 0x8c as f64],
    [0x5e as f64, 0xc9 as f64, 0x62 as f64],
    [0xfd as f64, 0xe7 as f64, 0x25 as f64],
];

/// What a figure shows; line kinds share one layout, heatmaps get cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Spectrum,
    Phase,
    Absorption,
    Heatmap,
    Profile,
}

impl PlotKind {
    fn wants_grid(self) -> bool {
        self == PlotKind::Heatmap
    }
}

/// Figure description: what to draw, labels, and optional axis overrides.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Override for the x axis; auto-ranged from the data when absent.
    pub x_range: Option<(f64, f64)>,
    /// Override for the y axis; auto-ranged from the data when absent.
    pub y_range: Option<(f64, f64)>,
}

/// One labeled curve.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Either a family of curves or a rectangular scalar field
/// (`z[row][col]` with `row` indexing `y` and `col` indexing `x`).
#[derive(Debug, Clone)]
pub enum PlotData {
    Lines(Vec<Series>),
    Grid {
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<Vec<f64>>,
    },
}

/// Renders the figure and writes it atomically to `out`.
pub fn render_plot(data: &PlotData, spec: &PlotSpec, out: &Path) -> Result<(), CliError> {
    let svg = render_svg(data, spec)?;
    write_atomic(out, &svg)
}

/// Pure rendering used by [`render_plot`] and the tests.
pub fn render_svg(data: &PlotData, spec: &PlotSpec) -> Result<String, CliError> {
    validate_spec(spec)?;
    match data {
        PlotData::Lines(series) => {
            if spec.kind.wants_grid() {
                return Err(CliError::validation(
                    "heatmap plots need gridded data, got curves",
                ));
            }
            render_lines(series, spec)
        }
        PlotData::Grid { x, y, z } => {
            if !spec.kind.wants_grid() {
                return Err(CliError::validation(
                    "curve plots need per-series data, got a grid",
                ));
            }
            render_grid(x, y, z, spec)
        }
    }
}

fn validate_spec(spec: &PlotSpec) -> Result<(), CliError> {
    for (name, range) in [("x", spec.x_range), ("y", spec.y_range)] {
        if let Some((lo, hi)) = range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::validation(format!(
                    "{name}-range [{lo}, {hi}] must be finite with min < max"
                )));
            }
        }
    }
    Ok(())
}

fn render_lines(series: &[Series], spec: &PlotSpec) -> Result<String, CliError> {
    if series.is_empty() {
        return Err(CliError::validation("plot has no data series"));
    }
    for s in series {
        if s.x.len() != s.y.len() {
            return Err(CliError::validation(format!(
                "series `{}` has {} x values but {} y values",
                s.label,
                s.x.len(),
                s.y.len()
            )));
        }
    }

    // Auto-range over finite samples only.
    let mut xr = RangeAcc::new();
    let mut yr = RangeAcc::new();
    for s in series {
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x.is_finite() && y.is_finite() {
                xr.push(x);
                yr.push(y);
            }
        }
    }
    let (x_lo, x_hi) = resolve_range(spec.x_range, &xr, "plot data contains no finite samples")?;
    let (y_lo, y_hi) = resolve_range(spec.y_range, &yr, "plot data contains no finite samples")?;

    let map = AxisMap::new(x_lo, x_hi, y_lo, y_hi);
    let mut svg = Canvas::open(spec, &map);

    svg.begin_clip();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        // Split the curve at non-finite samples.
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut runs: Vec<Vec<(f64, f64)>> = Vec::new();
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x.is_finite() && y.is_finite() {
                run.push((map.sx(x), map.sy(y)));
            } else if !run.is_empty() {
                runs.push(std::mem::take(&mut run));
            }
        }
        if !run.is_empty() {
            runs.push(run);
        }
        for run in runs {
            if run.len() >= 2 {
                let pts: Vec<String> = run
                    .iter()
                    .map(|&(x, y)| format!("{},{}", px(x), px(y)))
                    .collect();
                let _ = writeln!(
                    svg.body,
                    r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##,
                    pts.join(" ")
                );
            } else {
                let (x, y) = run[0];
                let _ = writeln!(
                    svg.body,
                    r##"<circle cx="{}" cy="{}" r="2" fill="{color}"/>"##,
                    px(x),
                    px(y)
                );
            }
        }
    }
    svg.end_clip();
    svg.legend(series.iter().map(|s| s.label.as_str()));
    Ok(svg.close())
}

fn render_grid(x: &[f64], y: &[f64], z: &[Vec<f64>], spec: &PlotSpec) -> Result<String, CliError> {
    if x.is_empty() || y.is_empty() || z.is_empty() {
        return Err(CliError::validation("heatmap has no data"));
    }
    if z.len() != y.len() || z.iter().any(|row| row.len() != x.len()) {
        return Err(CliError::validation(format!(
            "heatmap dimensions do not match: {} x values, {} y values, {} z rows",
            x.len(),
            y.len(),
            z.len()
        )));
    }

    let x_edges = cell_edges(x);
    let y_edges = cell_edges(y);
    let mut zr = RangeAcc::new();
    for row in z {
        for &v in row {
            if v.is_finite() {
                zr.push(v);
            }
        }
    }
    let (z_lo, z_hi) = zr
        .bounds()
        .ok_or_else(|| CliError::validation("heatmap contains no finite samples"))?;

    let mut xr = RangeAcc::new();
    xr.push(x_edges[0]);
    xr.push(*x_edges.last().unwrap());
    let mut yr = RangeAcc::new();
    yr.push(y_edges[0]);
    yr.push(*y_edges.last().unwrap());
    let (x_lo, x_hi) = resolve_range(spec.x_range, &xr, "heatmap axes are degenerate")?;
    let (y_lo, y_hi) = resolve_range(spec.y_range, &yr, "heatmap axes are degenerate")?;

    let map = AxisMap::new(x_lo, x_hi, y_lo, y_hi);
    let mut svg = Canvas::open(spec, &map);

    svg.begin_clip();
    for (iy, row) in z.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let t = if z_hi > z_lo {
                (v - z_lo) / (z_hi - z_lo)
            } else {
                0.5
            };
            let x0 = map.sx(x_edges[ix]);
            let x1 = map.sx(x_edges[ix + 1]);
            let y0 = map.sy(y_edges[iy + 1]);
            let y1 = map.sy(y_edges[iy]);
            let _ = writeln!(
                svg.body,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"##,
                px(x0),
                px(y0),
                px(x1 - x0),
                px(y1 - y0),
                heat_color(t)
            );
        }
    }
    svg.end_clip();
    svg.note(&format!("z: {} to {}", sig(z_lo), sig(z_hi)));
    Ok(svg.close())
}

/// Running min/max over pushed values.
struct RangeAcc {
    lo: f64,
    hi: f64,
    any: bool,
}

impl RangeAcc {
    fn new() -> Self {
        Self {
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
            any: false,
        }
    }

    fn push(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
        self.any = true;
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        self.any.then_some((self.lo, self.hi))
    }
}

fn resolve_range(
    explicit: Option<(f64, f64)>,
    acc: &RangeAcc,
    empty_msg: &str,
) -> Result<(f64, f64), CliError> {
    if let Some(r) = explicit {
        return Ok(r);
    }
    let (lo, hi) = acc
        .bounds()
        .ok_or_else(|| CliError::validation(empty_msg))?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        // Flat data: open a deterministic window around the single value.
        let pad = (lo.abs() * 0.05).max(0.5);
        Ok((lo - pad, lo + pad))
    }
}

/// Cell boundaries at midpoints between samples, extended half a pitch at
/// both ends (unit half-width for a single sample).
fn cell_edges(centers: &[f64]) -> Vec<f64> {
    let n = centers.len();
    let mut edges = Vec::with_capacity(n + 1);
    if n == 1 {
        return vec![centers[0] - 0.5, centers[0] + 0.5];
    }
    edges.push(centers[0] - 0.5 * (centers[1] - centers[0]));
    for w in centers.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    edges.push(centers[n - 1] + 0.5 * (centers[n - 1] - centers[n - 2]));
    edges
}

fn heat_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (HEAT_STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(HEAT_STOPS.len() - 2);
    let f = t - i as f64;
    let mix = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(HEAT_STOPS[i][0], HEAT_STOPS[i + 1][0]),
        mix(HEAT_STOPS[i][1], HEAT_STOPS[i + 1][1]),
        mix(HEAT_STOPS[i][2], HEAT_STOPS[i + 1][2]),
    )
}

/// Data-to-pixel affine map for the fixed plot area.
struct AxisMap {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl AxisMap {
    fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    fn sx(&self, v: f64) -> f64 {
        MARGIN_LEFT
            + (v - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, v: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (v - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// SVG assembly: fixed chrome (frame, ticks, labels) around a clipped body.
struct Canvas {
    body: String,
}

impl Canvas {
    fn open(spec: &PlotSpec, map: &AxisMap) -> Self {
        let mut s = String::with_capacity(8192);
        let _ = writeln!(
            s,
            r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"##
        );
        let _ = writeln!(
            s,
            r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
        );
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let _ = writeln!(
            s,
            r##"<defs><clipPath id="plotclip"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"##,
            px(MARGIN_LEFT),
            px(MARGIN_TOP),
            px(plot_w),
            px(plot_h)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#fcfcfc" stroke="none"/>"##,
            px(MARGIN_LEFT),
            px(MARGIN_TOP),
            px(plot_w),
            px(plot_h)
        );

        // Tick grid, marks, and labels.
        for t in ticks(map.x_lo, map.x_hi) {
            let x = px(map.sx(t.value));
            let _ = writeln!(
                s,
                r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#e5e5e5" stroke-width="1"/>"##,
                px(MARGIN_TOP),
                px(HEIGHT - MARGIN_BOTTOM)
            );
            let _ = writeln!(
                s,
                r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333333" stroke-width="1"/>"##,
                px(HEIGHT - MARGIN_BOTTOM),
                px(HEIGHT - MARGIN_BOTTOM + 5.0)
            );
            let _ = writeln!(
                s,
                r##"<text x="{x}" y="{}" font-family="monospace" font-size="12" fill="#333333" text-anchor="middle">{}</text>"##,
                px(HEIGHT - MARGIN_BOTTOM + 18.0),
                t.label
            );
        }
        for t in ticks(map.y_lo, map.y_hi) {
            let y = px(map.sy(t.value));
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#e5e5e5" stroke-width="1"/>"##,
                px(MARGIN_LEFT),
                px(WIDTH - MARGIN_RIGHT)
            );
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#333333" stroke-width="1"/>"##,
                px(MARGIN_LEFT - 5.0),
                px(MARGIN_LEFT)
            );
            let _ = writeln!(
                s,
                r##"<text x="{}" y="{y}" font-family="monospace" font-size="12" fill="#333333" text-anchor="end" dominant-baseline="middle">{}</text>"##,
                px(MARGIN_LEFT - 9.0),
                t.label
            );
        }

        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
            px(MARGIN_LEFT),
            px(MARGIN_TOP),
            px(plot_w),
            px(plot_h)
        );
        let _ = writeln!(
            s,
            r##"<text x="{}" y="26" font-family="monospace" font-size="15" font-weight="bold" fill="#111111">{}</text>"##,
            px(MARGIN_LEFT),
            xml_escape(&spec.title)
        );
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" font-family="monospace" font-size="13" fill="#111111" text-anchor="middle">{}</text>"##,
            px(MARGIN_LEFT + plot_w / 2.0),
            px(HEIGHT - 14.0),
            xml_escape(&spec.x_label)
        );
        let _ = writeln!(
            s,
            r##"<text x="20" y="{}" font-family="monospace" font-size="13" fill="#111111" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"##,
            px(MARGIN_TOP + plot_h / 2.0),
            px(MARGIN_TOP + plot_h / 2.0),
            xml_escape(&spec.y_label)
        );

        Self { body: s }
    }

    fn begin_clip(&mut self) {
        let _ = writeln!(self.body, r##"<g clip-path="url(#plotclip)">"##);
    }

    fn end_clip(&mut self) {
        let _ = writeln!(self.body, "</g>");
    }

    fn legend<'a>(&mut self, labels: impl Iterator<Item = &'a str>) {
        let x = WIDTH - MARGIN_RIGHT - 170.0;
        for (i, label) in labels.enumerate() {
            let y = MARGIN_TOP + 18.0 + 18.0 * i as f64;
            let color = PALETTE[i % PALETTE.len()];
            let _ = writeln!(
                self.body,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"##,
                px(x),
                px(y - 4.0),
                px(x + 22.0),
                px(y - 4.0)
            );
            let _ = writeln!(
                self.body,
                r##"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="#111111">{}</text>"##,
                px(x + 28.0),
                px(y),
                xml_escape(label)
            );
        }
    }

    fn note(&mut self, text: &str) {
        let _ = writeln!(
            self.body,
            r##"<text x="{}" y="26" font-family="monospace" font-size="12" fill="#333333" text-anchor="end">{}</text>"##,
            px(WIDTH - MARGIN_RIGHT),
            xml_escape(text)
        );
    }

    fn close(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

struct Tick {
    value: f64,
    label: String,
}

/// At most ~7 ticks on a 1-2-5 ladder, formatted with just enough decimals
/// for the step size.
fn ticks(lo: f64, hi: f64) -> Vec<Tick> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        mag
    } else if norm <= 2.0 {
        2.0 * mag
    } else if norm <= 5.0 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let decimals = (-step.log10().floor() as i32).max(0) as usize;
    let mut out = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    // Guard against the ceil landing one step below due to rounding.
    if (k as f64) * step < lo - step * 1e-9 {
        k += 1;
    }
    loop {
        let v = k as f64 * step;
        if v > hi + step * 1e-9 {
            break;
        }
        let shown = if v.abs() < step * 1e-9 { 0.0 } else { v };
        out.push(Tick {
            value: v,
            label: format!("{shown:.decimals$}"),
        });
        k += 1;
        if out.len() > 20 {
            break;
        }
    }
    out
}

/// Pixel coordinates at fixed precision.
fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Short significand form for range notes.
fn sig(v: f64) -> String {
    format!("{v:.4}")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
