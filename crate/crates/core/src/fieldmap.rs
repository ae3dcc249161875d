//! Analysis of transverse magnetic-field maps: local polarization
//! (spin-angular-momentum density), its mirror symmetry between propagation
//! directions, and the chiral coupling rates a small magnet picks up at a
//! given placement.

use num_complex::Complex64;
use thiserror::Error;

/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_061_27e-6;
/// Reduced Planck constant (J*s).
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FieldMapError {
    #[error("field-map dimensions {nx}x{ny} do not match {len} samples")]
    DimensionMismatch { nx: usize, ny: usize, len: usize },
    #[error("field map needs at least one sample per axis")]
    EmptyGrid,
    #[error("axis `{axis}` is not strictly increasing at index {index}")]
    NonMonotonicAxis { axis: &'static str, index: usize },
    #[error("probe position ({x_mm}, {y_mm}) mm lies outside the mapped region")]
    OutOfBounds { x_mm: f64, y_mm: f64 },
    #[error(
        "sphere footprint at ({x_mm}, {y_mm}) mm with radius {radius_mm} mm covers no grid samples"
    )]
    EmptyFootprint {
        x_mm: f64,
        y_mm: f64,
        radius_mm: f64,
    },
    #[error("sphere footprint at y = {y_mm} mm with radius {radius_mm} mm extends beyond the mapped region")]
    FootprintClipped { y_mm: f64, radius_mm: f64 },
    #[error("invalid coupling constant `{name}` = {value}: must be finite and > 0")]
    InvalidConstant { name: &'static str, value: f64 },
}

/// Complex transverse H-field sampled on a rectangular grid, for both
/// propagation directions. Arrays are row-major: index `iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub xs_mm: Vec<f64>,
    pub ys_mm: Vec<f64>,
    /// Longitudinal H component, rightward excitation.
    pub hx_r: Vec<Complex64>,
    /// Transverse H component, rightward excitation.
    pub hy_r: Vec<Complex64>,
    /// Longitudinal H component, leftward excitation.
    pub hx_l: Vec<Complex64>,
    /// Transverse H component, leftward excitation.
    pub hy_l: Vec<Complex64>,
}

/// Which excitation direction to analyze.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rightward,
    Leftward,
}

impl FieldMap {
    pub fn validate(&self) -> Result<(), FieldMapError> {
        let nx = self.xs_mm.len();
        let ny = self.ys_mm.len();
        if nx == 0 || ny == 0 {
            return Err(FieldMapError::EmptyGrid);
        }
        for (axis, vals) in [("x", &self.xs_mm), ("y", &self.ys_mm)] {
            for (i, w) in vals.windows(2).enumerate() {
                if w[1] <= w[0] {
                    return Err(FieldMapError::NonMonotonicAxis { axis, index: i + 1 });
                }
            }
        }
        let expected = nx * ny;
        for arr in [&self.hx_r, &self.hy_r, &self.hx_l, &self.hy_l] {
            if arr.len() != expected {
                return Err(FieldMapError::DimensionMismatch {
                    nx,
                    ny,
                    len: arr.len(),
                });
            }
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.xs_mm.len()
    }

    pub fn ny(&self) -> usize {
        self.ys_mm.len()
    }

    fn components(&self, dir: Direction) -> (&[Complex64], &[Complex64]) {
        match dir {
            Direction::Rightward => (&self.hx_r, &self.hy_r),
            Direction::Leftward => (&self.hx_l, &self.hy_l),
        }
    }
}

/// Raw transverse spin density `Im(Hx* Hy)` per sample (unnormalized).
pub fn spin_density_raw(map: &FieldMap, dir: Direction) -> Result<Vec<f64>, FieldMapError> {
    map.validate()?;
    let (hx, hy) = map.components(dir);
    Ok(hx.iter().zip(hy).map(|(x, y)| (x.conj() * y).im).collect())
}

/// Normalized spin density `s_z = 2*Im(Hx* Hy) / (|Hx|^2 + |Hy|^2)`,
/// bounded to [-1, 1]; zero where the field vanishes.
pub fn spin_density(map: &FieldMap, dir: Direction) -> Result<Vec<f64>, FieldMapError> {
    map.validate()?;
    let (hx, hy) = map.components(dir);
    Ok(hx
        .iter()
        .zip(hy)
        .map(|(x, y)| {
            let denom = x.norm_sqr() + y.norm_sqr();
            if denom == 0.0 {
                0.0
            } else {
                2.0 * (x.conj() * y).im / denom
            }
        })
        .collect())
}

/// Physical constants entering the coupling-rate prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPrefactor {
    /// Saturation magnetization (A/m).
    pub m_s: f64,
    /// Magnet volume (m^3).
    pub v_s: f64,
    /// Gyromagnetic ratio /2pi (Hz/T).
    pub gyro_hz_per_t: f64,
}

impl Default for CouplingPrefactor {
    /// YIG sphere of 1 mm diameter: Ms = 1.94e5 A/m, V = pi/6 mm^3.
    fn default() -> Self {
        Self {
            m_s: 1.94e5,
            v_s: std::f64::consts::PI / 6.0 * 1e-9,
            gyro_hz_per_t: crate::model::DEFAULT_GYRO_HZ_PER_T,
        }
    }
}

impl CouplingPrefactor {
    fn validate(&self) -> Result<(), FieldMapError> {
        for (name, value) in [
            ("m_s", self.m_s),
            ("v_s", self.v_s),
            ("gyro_hz_per_t", self.gyro_hz_per_t),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(FieldMapError::InvalidConstant { name, value });
            }
        }
        Ok(())
    }

    /// `mu0 * sqrt(gamma_angular * Ms * Vs / (2*hbar))`, the factor that
    /// turns the rotating-field amplitude |<Hx> - i<Hy>| into g (rad-free,
    /// since the fields here are per-photon normalized).
    pub fn amplitude_factor(&self) -> f64 {
        let gyro_angular = 2.0 * std::f64::consts::PI * self.gyro_hz_per_t;
        MU0 * (gyro_angular * self.m_s * self.v_s / (2.0 * HBAR)).sqrt()
    }
}

/// Coupling rates extracted at one magnet placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRates {
    /// g for rightward drive (Hz).
    pub g_r_hz: f64,
    /// g for leftward drive (Hz).
    pub g_l_hz: f64,
    /// kappa_R/2pi = g_R^2 (Hz), single-mode density convention.
    pub kappa_r_hz: f64,
    /// kappa_L/2pi = g_L^2 (Hz).
    pub kappa_l_hz: f64,
    /// Chirality (kR - kL)/(kR + kL); NaN-free: 0 when both vanish.
    pub chirality: f64,
    /// Normalized spin density averaged over the footprint, rightward drive.
    pub spin_density_r: f64,
    /// Same for leftward drive.
    pub spin_density_l: f64,
    /// Number of grid samples inside the footprint.
    pub n_samples: usize,
}

/// Averages the complex field phasors over a circular footprint of
/// `radius_mm` centered at (`x_mm`, `y_mm`) and converts the co-rotating
/// amplitude `|<Hx> - i<Hy>|` into coupling rates for both directions.
///
/// A point probe (radius 0) snaps to the nearest grid sample.
pub fn coupling_at(
    map: &FieldMap,
    x_mm: f64,
    y_mm: f64,
    radius_mm: f64,
    pref: &CouplingPrefactor,
) -> Result<CouplingRates, FieldMapError> {
    map.validate()?;
    pref.validate()?;
    let (x0, x1) = (map.xs_mm[0], *map.xs_mm.last().unwrap());
    let (y0, y1) = (map.ys_mm[0], *map.ys_mm.last().unwrap());
    if x_mm < x0 || x_mm > x1 || y_mm < y0 || y_mm > y1 {
        return Err(FieldMapError::OutOfBounds { x_mm, y_mm });
    }

    // Collect sample indices inside the footprint.
    let mut indices = Vec::new();
    if radius_mm <= 0.0 {
        let ix = nearest(&map.xs_mm, x_mm);
        let iy = nearest(&map.ys_mm, y_mm);
        indices.push(iy * map.nx() + ix);
    } else {
        let r2 = radius_mm * radius_mm;
        for (iy, &y) in map.ys_mm.iter().enumerate() {
            let dy = y - y_mm;
            if dy * dy > r2 {
                continue;
            }
            for (ix, &x) in map.xs_mm.iter().enumerate() {
                let dx = x - x_mm;
                if dx * dx + dy * dy <= r2 {
                    indices.push(iy * map.nx() + ix);
                }
            }
        }
        if indices.is_empty() {
            return Err(FieldMapError::EmptyFootprint {
                x_mm,
                y_mm,
                radius_mm,
            });
        }
    }

    let analyze = |hx: &[Complex64], hy: &[Complex64]| -> (f64, f64) {
        let n = indices.len() as f64;
        let mut mx = Complex64::new(0.0, 0.0);
        let mut my = Complex64::new(0.0, 0.0);
        let mut spin_num = 0.0;
        let mut spin_den = 0.0;
        for &i in &indices {
            mx += hx[i];
            my += hy[i];
            spin_num += 2.0 * (hx[i].conj() * hy[i]).im;
            spin_den += hx[i].norm_sqr() + hy[i].norm_sqr();
        }
        mx /= n;
        my /= n;
        let g = pref.amplitude_factor() * (mx - Complex64::i() * my).norm();
        let spin = if spin_den == 0.0 {
            0.0
        } else {
            spin_num / spin_den
        };
        (g, spin)
    };

    let (g_r, spin_r) = analyze(&map.hx_r, &map.hy_r);
    let (g_l, spin_l) = analyze(&map.hx_l, &map.hy_l);
    let kappa_r = g_r * g_r;
    let kappa_l = g_l * g_l;
    let sum = kappa_r + kappa_l;
    Ok(CouplingRates {
        g_r_hz: g_r,
        g_l_hz: g_l,
        kappa_r_hz: kappa_r,
        kappa_l_hz: kappa_l,
        chirality: if sum == 0.0 {
            0.0
        } else {
            (kappa_r - kappa_l) / sum
        },
        spin_density_r: spin_r,
        spin_density_l: spin_l,
        n_samples: indices.len(),
    })
}

/// One row of [`kappa_profile`]: the probed transverse position together
/// with either the extracted rates or that position's failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub y_mm: f64,
    pub outcome: Result<CouplingRates, FieldMapError>,
}

/// Scans the magnet along the transverse axis at fixed `x_mm`, extracting
/// coupling rates at every requested position. A footprint that is not
/// fully inside the mapped region yields a per-position error entry; the
/// scan itself never aborts on placement problems.
pub fn kappa_profile(
    map: &FieldMap,
    x_mm: f64,
    radius_mm: f64,
    pref: &CouplingPrefactor,
    y_positions: &[f64],
) -> Result<Vec<ProfileEntry>, FieldMapError> {
    map.validate()?;
    pref.validate()?;
    let (x0, x1) = (map.xs_mm[0], *map.xs_mm.last().unwrap());
    let (y0, y1) = (map.ys_mm[0], *map.ys_mm.last().unwrap());
    let r = radius_mm.max(0.0);
    Ok(y_positions
        .iter()
        .map(|&y_mm| {
            let outcome = if x_mm - r < x0 || x_mm + r > x1 || y_mm - r < y0 || y_mm + r > y1 {
                Err(FieldMapError::FootprintClipped { y_mm, radius_mm })
            } else {
                coupling_at(map, x_mm, y_mm, radius_mm, pref)
            };
            ProfileEntry { y_mm, outcome }
        })
        .collect())
}

fn nearest(axis: &[f64], v: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &x) in axis.iter().enumerate() {
        let d = (x - v).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Builds a synthetic field map with ideal mirror symmetry: circular
/// polarization whose handedness rotates with transverse position as
/// `Hy = i*tanh(y/y0)*Hx` for the rightward drive and the complex-conjugate
/// pattern for the leftward drive. Useful as a test fixture and demo input.
pub fn synthetic_chiral_map(
    xs_mm: Vec<f64>,
    ys_mm: Vec<f64>,
    y0_mm: f64,
    amplitude: f64,
) -> FieldMap {
    let nx = xs_mm.len();
    let ny = ys_mm.len();
    let n = nx * ny;
    let mut hx_r = Vec::with_capacity(n);
    let mut hy_r = Vec::with_capacity(n);
    let mut hx_l = Vec::with_capacity(n);
    let mut hy_l = Vec::with_capacity(n);
    for &y in &ys_mm {
        let t = (y / y0_mm).tanh();
        for _ in &xs_mm {
            let hx = Complex64::new(amplitude, 0.0);
            let hy = Complex64::new(0.0, amplitude * t);
            hx_r.push(hx);
            hy_r.push(hy);
            hx_l.push(hx.conj());
            hy_l.push(hy.conj());
        }
    }
    FieldMap {
        xs_mm,
        ys_mm,
        hx_r,
        hy_r,
        hx_l,
        hy_l,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(start: f64, stop: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                start * (1.0 - t) + stop * t
            })
            .collect()
    }

    fn uniform_map(hx: Complex64, hy: Complex64) -> FieldMap {
        let xs = axis(-1.0, 1.0, 5);
        let ys = axis(-2.0, 2.0, 9);
        let n = xs.len() * ys.len();
        FieldMap {
            xs_mm: xs,
            ys_mm: ys,
            hx_r: vec![hx; n],
            hy_r: vec![hy; n],
            hx_l: vec![hx.conj(); n],
            hy_l: vec![hy.conj(); n],
        }
    }

    #[test]
    fn spin_density_of_circular_polarizations() {
        // Hy = +i*Hx is left-circular in this convention: s_z = +1.
        let lcp = uniform_map(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let s = spin_density(&lcp, Direction::Rightward).unwrap();
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-15));
        // The mirrored (conjugate) field flips the sign.
        let s = spin_density(&lcp, Direction::Leftward).unwrap();
        assert!(s.iter().all(|v| (v + 1.0).abs() < 1e-15));

        // Linear polarization carries no transverse spin.
        let lin = uniform_map(Complex64::new(1.0, 0.0), Complex64::new(0.7, 0.0));
        let s = spin_density(&lin, Direction::Rightward).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));

        // Dead region reports 0, not NaN.
        let dead = uniform_map(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let s = spin_density(&dead, Direction::Rightward).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spin_density_is_bounded_and_phase_invariant() {
        let mut map = uniform_map(Complex64::new(0.3, -0.8), Complex64::new(-0.5, 0.2));
        let s1 = spin_density(&map, Direction::Rightward).unwrap();
        for v in &s1 {
            assert!(v.abs() <= 1.0 + 1e-15);
        }
        // Global phase rotation leaves s_z untouched.
        let phase = Complex64::from_polar(1.0, 1.234);
        for v in map.hx_r.iter_mut().chain(map.hy_r.iter_mut()) {
            *v *= phase;
        }
        let s2 = spin_density(&map, Direction::Rightward).unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn raw_spin_scales_quadratically_with_amplitude() {
        let map = uniform_map(Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0));
        let raw = spin_density_raw(&map, Direction::Rightward).unwrap();
        assert!(raw.iter().all(|v| (v - 4.0).abs() < 1e-15));
    }

    #[test]
    fn counter_rotating_field_decouples() {
        // Hy = -i*Hx: the co-rotating projection <Hx> - i<Hy> vanishes.
        let map = uniform_map(Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0));
        let pref = CouplingPrefactor::default();
        let rates = coupling_at(&map, 0.0, 0.0, 0.6, &pref).unwrap();
        assert!(rates.g_r_hz < 1e-12 * pref.amplitude_factor());
        // The mirrored drive sees Hy = +i*Hx and couples at full strength |2*Hx|.
        let expected = pref.amplitude_factor() * 2.0;
        assert!((rates.g_l_hz - expected).abs() < 1e-9 * expected);
        assert!((rates.chirality + 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_scales_with_field_power() {
        // Doubling the field amplitude doubles g and quadruples kappa = g^2.
        let pref = CouplingPrefactor::default();
        let m1 = uniform_map(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let m2 = uniform_map(Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0));
        let r1 = coupling_at(&m1, 0.0, 0.0, 0.5, &pref).unwrap();
        let r2 = coupling_at(&m2, 0.0, 0.0, 0.5, &pref).unwrap();
        assert!((r2.kappa_r_hz / r1.kappa_r_hz - 4.0).abs() < 1e-12);
        assert!((r2.g_r_hz / r1.g_r_hz - 2.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_map_has_mirror_antisymmetry_and_unit_chirality() {
        let map = synthetic_chiral_map(axis(-5.0, 5.0, 11), axis(-3.0, 3.0, 25), 0.8, 1.0);
        map.validate().unwrap();
        let s_r = spin_density(&map, Direction::Rightward).unwrap();
        let s_l = spin_density(&map, Direction::Leftward).unwrap();
        // Mirror rule: opposite drives carry opposite spin pointwise.
        for (a, b) in s_r.iter().zip(&s_l) {
            assert!((a + b).abs() < 1e-15);
        }
        // y -> -y flips the rightward spin (rows are y-major).
        let ny = map.ny();
        let nx = map.nx();
        for iy in 0..ny {
            for ix in 0..nx {
                let here = s_r[iy * nx + ix];
                let mirrored = s_r[(ny - 1 - iy) * nx + ix];
                assert!((here + mirrored).abs() < 1e-15);
            }
        }

        // Far on the +y side the field is nearly fully co-rotating for the
        // rightward drive (tanh saturates): C -> +1 and sign(C) = sign(s_z).
        let pref = CouplingPrefactor::default();
        let top = coupling_at(&map, 0.0, 3.0, 0.0, &pref).unwrap();
        assert!((top.chirality - 1.0).abs() < 1e-5, "C = {}", top.chirality);
        assert!(top.spin_density_r > 0.0);
        let bottom = coupling_at(&map, 0.0, -3.0, 0.0, &pref).unwrap();
        assert!((bottom.chirality + 1.0).abs() < 1e-5);
        assert!(bottom.spin_density_r < 0.0);
        // On the symmetry line both directions couple equally.
        let center = coupling_at(&map, 0.0, 0.0, 0.0, &pref).unwrap();
        assert!(center.chirality.abs() < 1e-12);
    }

    #[test]
    fn footprint_averaging_uses_all_samples_inside() {
        let map = synthetic_chiral_map(axis(-5.0, 5.0, 21), axis(-3.0, 3.0, 13), 0.8, 1.0);
        let pref = CouplingPrefactor::default();
        let rates = coupling_at(&map, 0.0, 2.0, 0.6, &pref).unwrap();
        // 0.5 mm grid pitch: radius 0.6 covers the 5-sample plus pattern
        // (diagonal neighbors sit at 0.707 mm, outside).
        assert_eq!(rates.n_samples, 5);

        let err = coupling_at(&map, 4.9, 2.9, 0.04, &pref);
        assert!(matches!(err, Err(FieldMapError::EmptyFootprint { .. })));

        let err = coupling_at(&map, 7.0, 0.0, 0.5, &pref);
        assert!(matches!(err, Err(FieldMapError::OutOfBounds { .. })));
    }

    #[test]
    fn profile_swaps_rates_under_mirror_and_flags_clipping() {
        let map = synthetic_chiral_map(axis(-5.0, 5.0, 21), axis(-3.0, 3.0, 13), 0.8, 1.0);
        let pref = CouplingPrefactor::default();
        let ys = [-3.0, -2.0, 0.0, 2.0, 3.0];
        let entries = kappa_profile(&map, 0.0, 0.6, &pref, &ys).unwrap();
        assert_eq!(entries.len(), ys.len());

        // The extreme positions clip the footprint against the map edge;
        // they report per-position errors while the scan continues.
        assert!(matches!(
            entries[0].outcome,
            Err(FieldMapError::FootprintClipped { .. })
        ));
        assert!(matches!(
            entries[4].outcome,
            Err(FieldMapError::FootprintClipped { .. })
        ));

        // Symmetry line: both directions couple equally, C = 0.
        let center = entries[2].outcome.as_ref().unwrap();
        assert!((center.kappa_r_hz - center.kappa_l_hz).abs() <= 1e-12 * center.kappa_r_hz);
        assert!(center.chirality.abs() < 1e-12);

        // Mirror pair y and -y: (kappa_R, kappa_L) swap and C flips sign.
        let below = entries[1].outcome.as_ref().unwrap();
        let above = entries[3].outcome.as_ref().unwrap();
        assert!((below.kappa_r_hz - above.kappa_l_hz).abs() <= 1e-12 * above.kappa_l_hz);
        assert!((below.kappa_l_hz - above.kappa_r_hz).abs() <= 1e-12 * above.kappa_r_hz);
        assert!((below.chirality + above.chirality).abs() < 1e-12);

        // The chirality sign tracks the footprint-averaged spin density.
        for (y, rates) in [(-2.0, below), (2.0, above)] {
            assert_eq!(
                rates.chirality.signum(),
                rates.spin_density_r.signum(),
                "sign law broken at y = {y}"
            );
        }
    }

    #[test]
    fn validation_rejects_malformed_maps() {
        let mut map = uniform_map(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        map.hy_l.pop();
        assert!(matches!(
            map.validate(),
            Err(FieldMapError::DimensionMismatch { .. })
        ));

        let mut map = uniform_map(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        map.ys_mm[3] = map.ys_mm[2];
        assert!(matches!(
            map.validate(),
            Err(FieldMapError::NonMonotonicAxis {
                axis: "y",
                index: 3
            })
        ));

        let empty = FieldMap {
            xs_mm: vec![],
            ys_mm: vec![0.0],
            hx_r: vec![],
            hy_r: vec![],
            hx_l: vec![],
            hy_l: vec![],
        };
        assert_eq!(empty.validate(), Err(FieldMapError::EmptyGrid));

        let pref = CouplingPrefactor {
            m_s: -5.0,
            ..Default::default()
        };
        let map = uniform_map(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        assert!(matches!(
            coupling_at(&map, 0.0, 0.0, 0.5, &pref),
            Err(FieldMapError::InvalidConstant { name: "m_s", .. })
        ));
    }

    #[test]
    fn default_prefactor_magnitudes() {
        // 1 mm YIG sphere: V = pi/6 mm^3 = 5.236e-10 m^3.
        let pref = CouplingPrefactor::default();
        assert!((pref.v_s - 5.235987755982987e-10).abs() < 1e-22);
        assert!(pref.amplitude_factor() > 0.0);
    }
}
