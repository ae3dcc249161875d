//! Closed-form two-port scattering model for a single magnon resonator with
//! direction-dependent waveguide coupling, plus the scalar metrics derived
//! from it (absorption, chirality, isolation, criticality).
//!
//! All user-facing rates (`gamma_i`, `kappa_r`, `kappa_l`) are "/2π"
//! quantities in Hz. The conversion to angular frequency happens exactly once,
//! inside [`s_matrix_single`].

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Angular-frequency factor applied once at the model boundary.
const TWO_PI: f64 = 2.0 * PI;

/// Absorption tolerance below zero that still counts as passive; anything
/// more negative indicates a broken model, not rounding.
pub const PASSIVITY_EPS: f64 = 1e-9;

/// Errors produced by the scattering model.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A parameter failed validation; carries the offending field by name.
    #[error("invalid parameter `{field}` = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// Chirality is undefined when both extrinsic rates vanish.
    #[error("chirality undefined: kappa_R = kappa_L = 0")]
    UndefinedChirality,
    /// Effective magnetic field B + B_A must be nonnegative.
    #[error("negative effective field B + B_A = {effective_t} T")]
    NegativeEffectiveField { effective_t: f64 },
    /// A field sweep needs at least one bias point.
    #[error("empty magnetic-field range")]
    EmptyFieldRange,
    /// Absorption fell below -{PASSIVITY_EPS}; only a bug can produce this.
    #[error("model consistency violation: absorption {value} at point {index} is below -{PASSIVITY_EPS}")]
    PassivityViolation { index: usize, value: f64 },
    /// Spectrum arrays must all match the grid length.
    #[error("spectrum arrays have length {got}, grid has {expected} points")]
    LengthMismatch { got: usize, expected: usize },
}

fn require_finite(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            value,
            reason: "must be finite",
        })
    }
}

fn require_nonnegative(field: &'static str, value: f64) -> Result<(), ModelError> {
    require_finite(field, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            value,
            reason: "must be >= 0",
        })
    }
}

/// One magnon mode coupled to the two propagation directions of a waveguide.
///
/// Rates are half-linewidths over 2π, in Hz, matching the convention in which
/// measured values are reported (e.g. "kappa_R/2π = 1.37 MHz").
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    /// Magnon resonance frequency (Hz).
    pub f_m_hz: f64,
    /// Intrinsic half-linewidth rate /2π (Hz).
    pub gamma_i_hz: f64,
    /// Extrinsic rate to the rightward-propagating mode /2π (Hz).
    pub kappa_r_hz: f64,
    /// Extrinsic rate to the leftward-propagating mode /2π (Hz).
    pub kappa_l_hz: f64,
    /// Transverse placement label (mm), carried for reporting only.
    pub y_pos_mm: Option<f64>,
    /// Vertical gap between sphere and waveguide (mm), reporting only.
    pub z_gap_mm: Option<f64>,
}

impl ResonatorParams {
    pub fn new(f_m_hz: f64, gamma_i_hz: f64, kappa_r_hz: f64, kappa_l_hz: f64) -> Self {
        Self {
            f_m_hz,
            gamma_i_hz,
            kappa_r_hz,
            kappa_l_hz,
            y_pos_mm: None,
            z_gap_mm: None,
        }
    }

    /// Checks every invariant, naming the first field that fails.
    pub fn validate(&self) -> Result<(), ModelError> {
        require_finite("f_m_hz", self.f_m_hz)?;
        if self.f_m_hz <= 0.0 {
            return Err(ModelError::InvalidParameter {
                field: "f_m_hz",
                value: self.f_m_hz,
                reason: "must be > 0",
            });
        }
        require_nonnegative("gamma_i_hz", self.gamma_i_hz)?;
        require_nonnegative("kappa_r_hz", self.kappa_r_hz)?;
        require_nonnegative("kappa_l_hz", self.kappa_l_hz)?;
        Ok(())
    }
}

/// Uniformly sampled frequency axis, strictly increasing, all samples > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    f_start_hz: f64,
    f_stop_hz: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(f_start_hz: f64, f_stop_hz: f64, n_points: usize) -> Result<Self, ModelError> {
        require_finite("f_start_hz", f_start_hz)?;
        require_finite("f_stop_hz", f_stop_hz)?;
        if f_start_hz <= 0.0 {
            return Err(ModelError::InvalidParameter {
                field: "f_start_hz",
                value: f_start_hz,
                reason: "all samples must be positive",
            });
        }
        if f_stop_hz <= f_start_hz {
            return Err(ModelError::InvalidParameter {
                field: "f_stop_hz",
                value: f_stop_hz,
                reason: "must be > f_start_hz",
            });
        }
        if n_points < 2 {
            return Err(ModelError::InvalidParameter {
                field: "n_points",
                value: n_points as f64,
                reason: "need at least 2 samples",
            });
        }
        Ok(Self {
            f_start_hz,
            f_stop_hz,
            n_points,
        })
    }

    pub fn f_start_hz(&self) -> f64 {
        self.f_start_hz
    }

    pub fn f_stop_hz(&self) -> f64 {
        self.f_stop_hz
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// k-th sample; endpoints are exact, interior points come from a lerp so
    /// the sequence is strictly increasing.
    pub fn sample(&self, k: usize) -> f64 {
        debug_assert!(k < self.n_points);
        let t = k as f64 / (self.n_points - 1) as f64;
        self.f_start_hz * (1.0 - t) + self.f_stop_hz * t
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.sample(k))
    }

    pub fn values(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Index of the sample closest to `f_hz`.
    pub fn nearest_index(&self, f_hz: f64) -> usize {
        let step = (self.f_stop_hz - self.f_start_hz) / (self.n_points - 1) as f64;
        let raw = ((f_hz - self.f_start_hz) / step).round();
        (raw.max(0.0) as usize).min(self.n_points - 1)
    }
}

/// Complex two-port scattering response sampled on a [`FrequencyGrid`].
///
/// S-parameters are stored as complex values; magnitudes in dB and phases are
/// derived views, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortSpectrum {
    pub grid: FrequencyGrid,
    pub s11: Vec<Complex64>,
    pub s21: Vec<Complex64>,
    pub s12: Vec<Complex64>,
    pub s22: Vec<Complex64>,
}

impl TwoPortSpectrum {
    pub fn new(
        grid: FrequencyGrid,
        s11: Vec<Complex64>,
        s21: Vec<Complex64>,
        s12: Vec<Complex64>,
        s22: Vec<Complex64>,
    ) -> Result<Self, ModelError> {
        let n = grid.len();
        for arr in [&s11, &s21, &s12, &s22] {
            if arr.len() != n {
                return Err(ModelError::LengthMismatch {
                    got: arr.len(),
                    expected: n,
                });
            }
        }
        Ok(Self {
            grid,
            s11,
            s21,
            s12,
            s22,
        })
    }

    /// Identity network (unit transmission, zero reflection) on `grid`.
    pub fn identity(grid: FrequencyGrid) -> Self {
        let n = grid.len();
        let one = vec![Complex64::new(1.0, 0.0); n];
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Self {
            grid,
            s11: zero.clone(),
            s21: one.clone(),
            s12: one,
            s22: zero,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Bias magnet configuration for tuning the magnon frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetConfig {
    /// Bias field (T).
    pub b_t: f64,
    /// Anisotropy field (T).
    pub b_a_t: f64,
    /// Gyromagnetic ratio (Hz/T, /2π convention).
    pub gyro_hz_per_t: f64,
}

/// Nominal gyromagnetic ratio of YIG, 28 GHz/T.
pub const DEFAULT_GYRO_HZ_PER_T: f64 = 2.8e10;

impl Default for MagnetConfig {
    fn default() -> Self {
        Self {
            b_t: 0.0,
            b_a_t: 0.0,
            gyro_hz_per_t: DEFAULT_GYRO_HZ_PER_T,
        }
    }
}

impl MagnetConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        require_finite("b_t", self.b_t)?;
        require_finite("b_a_t", self.b_a_t)?;
        require_finite("gyro_hz_per_t", self.gyro_hz_per_t)?;
        if self.gyro_hz_per_t <= 0.0 {
            return Err(ModelError::InvalidParameter {
                field: "gyro_hz_per_t",
                value: self.gyro_hz_per_t,
                reason: "must be > 0",
            });
        }
        Ok(())
    }
}

/// Two-port response of a single chirally coupled resonator.
///
/// Per frequency, with all rates converted to angular units:
///
/// ```text
/// S21 = 1 - i*kR / (w - wm + i*(g + (kR + kL)/2))
/// S12 = 1 - i*kL / (w - wm + i*(g + (kR + kL)/2))
/// S11 = S22 = -i*sqrt(kR*kL) / (w - wm + i*(g + (kR + kL)/2))
/// ```
///
/// `S11` and `S22` share one computed value, so they are equal exactly.
pub fn s_matrix_single(
    params: &ResonatorParams,
    grid: &FrequencyGrid,
) -> Result<TwoPortSpectrum, ModelError> {
    params.validate()?;
    let omega_m = TWO_PI * params.f_m_hz;
    let gamma = TWO_PI * params.gamma_i_hz;
    let kappa_r = TWO_PI * params.kappa_r_hz;
    let kappa_l = TWO_PI * params.kappa_l_hz;
    let half_total = gamma + 0.5 * (kappa_r + kappa_l);
    let kappa_refl = (kappa_r * kappa_l).sqrt();

    let n = grid.len();
    let mut s11 = Vec::with_capacity(n);
    let mut s21 = Vec::with_capacity(n);
    let mut s12 = Vec::with_capacity(n);
    let mut s22 = Vec::with_capacity(n);
    for f in grid.iter() {
        let denom = Complex64::new(TWO_PI * f - omega_m, half_total);
        let inv = denom.inv();
        let t_r = Complex64::new(1.0, 0.0) - Complex64::new(0.0, kappa_r) * inv;
        let t_l = Complex64::new(1.0, 0.0) - Complex64::new(0.0, kappa_l) * inv;
        let r = -Complex64::new(0.0, kappa_refl) * inv;
        s21.push(t_r);
        s12.push(t_l);
        s11.push(r);
        s22.push(r);
    }
    TwoPortSpectrum::new(*grid, s11, s21, s12, s22)
}

/// Absorption per grid point: `A21 = 1 - |S21|^2 - |S11|^2` and
/// `A12 = 1 - |S12|^2 - |S22|^2`. Values are reported raw, never clamped.
pub fn absorption(spec: &TwoPortSpectrum) -> (Vec<f64>, Vec<f64>) {
    let a21 = spec
        .s21
        .iter()
        .zip(&spec.s11)
        .map(|(t, r)| 1.0 - t.norm_sqr() - r.norm_sqr())
        .collect();
    let a12 = spec
        .s12
        .iter()
        .zip(&spec.s22)
        .map(|(t, r)| 1.0 - t.norm_sqr() - r.norm_sqr())
        .collect();
    (a21, a12)
}

/// [`absorption`] plus a model-consistency check: absorption below
/// -[`PASSIVITY_EPS`] can only arise from a bug and is reported as an error
/// rather than clamped.
pub fn absorption_checked(spec: &TwoPortSpectrum) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let (a21, a12) = absorption(spec);
    for (index, value) in a21.iter().chain(a12.iter()).copied().enumerate() {
        if value < -PASSIVITY_EPS {
            return Err(ModelError::PassivityViolation {
                index: index % a21.len(),
                value,
            });
        }
    }
    Ok((a21, a12))
}

/// Dimensionless coupling chirality `C = (kR - kL)/(kR + kL)` in [-1, 1].
pub fn chirality(params: &ResonatorParams) -> Result<f64, ModelError> {
    require_nonnegative("kappa_r_hz", params.kappa_r_hz)?;
    require_nonnegative("kappa_l_hz", params.kappa_l_hz)?;
    let sum = params.kappa_r_hz + params.kappa_l_hz;
    if sum == 0.0 {
        return Err(ModelError::UndefinedChirality);
    }
    Ok((params.kappa_r_hz - params.kappa_l_hz) / sum)
}

/// Isolation per grid point, `ISO = 20*log10(|S21|/|S12|)` in dB.
///
/// Negative when rightward transmission is suppressed. A vanishing magnitude
/// on either side yields an infinite sentinel (never a crash); if both vanish
/// the point is reported as 0 dB, i.e. no asymmetry.
pub fn isolation_db(spec: &TwoPortSpectrum) -> Vec<f64> {
    spec.s21
        .iter()
        .zip(&spec.s12)
        .map(|(t_r, t_l)| {
            let m21 = t_r.norm();
            let m12 = t_l.norm();
            if m21 == 0.0 && m12 == 0.0 {
                0.0
            } else {
                20.0 * (m21 / m12).log10()
            }
        })
        .collect()
}

/// Magnon frequency from the bias field: `f_m = gyro * (B + B_A)`.
pub fn magnon_frequency(mag: &MagnetConfig) -> Result<f64, ModelError> {
    mag.validate()?;
    let effective = mag.b_t + mag.b_a_t;
    if effective < 0.0 {
        return Err(ModelError::NegativeEffectiveField {
            effective_t: effective,
        });
    }
    Ok(mag.gyro_hz_per_t * effective)
}

/// Bias field required to place the magnon mode at `f_m_hz`.
pub fn required_field(f_m_hz: f64, mag: &MagnetConfig) -> Result<f64, ModelError> {
    mag.validate()?;
    require_nonnegative("f_m_hz", f_m_hz)?;
    Ok(f_m_hz / mag.gyro_hz_per_t - mag.b_a_t)
}

/// Relative tolerance for deciding the critical condition kappa_R = 2*gamma_i.
pub const CRITICAL_RTOL: f64 = 1e-9;

/// Result of [`critical_detuning_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityReport {
    /// The rate that would satisfy critical coupling, `2 * gamma_i` (Hz, /2π).
    pub kappa_r_critical_hz: f64,
    /// Signed distance `kappa_R - 2*gamma_i` (Hz, /2π).
    pub gap_hz: f64,
    /// True iff `|kappa_R - 2*gamma_i| <= CRITICAL_RTOL * 2*gamma_i`.
    pub is_critical: bool,
    /// False flags non-chiral input (`kappa_L != 0`); the critical condition
    /// assumes the reflection channel is closed.
    pub perfect_chiral: bool,
}

/// Reports how far a resonator is from the critical coupling condition
/// `kappa_R = 2*gamma_i`, assuming perfect-chiral intent (kappa_L = 0).
pub fn critical_detuning_check(params: &ResonatorParams) -> CriticalityReport {
    let target = 2.0 * params.gamma_i_hz;
    let gap = params.kappa_r_hz - target;
    CriticalityReport {
        kappa_r_critical_hz: target,
        gap_hz: gap,
        is_critical: gap.abs() <= CRITICAL_RTOL * target,
        perfect_chiral: params.kappa_l_hz == 0.0,
    }
}

/// Transmission mapping over a bias-field sweep (rows) and a frequency grid
/// (columns), with coupling rates held fixed across the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSweepMap {
    /// Bias field per row (T).
    pub b_values_t: Vec<f64>,
    /// Magnon frequency per row (Hz).
    pub f_m_hz: Vec<f64>,
    pub grid: FrequencyGrid,
    /// `20*log10|S21|`, one row per bias point.
    pub s21_db: Vec<Vec<f64>>,
    /// `20*log10|S12|`, one row per bias point.
    pub s12_db: Vec<Vec<f64>>,
    /// Isolation in dB, one row per bias point.
    pub iso_db: Vec<Vec<f64>>,
}

/// Sweeps the bias field, retuning the magnon frequency per row while the
/// template's coupling rates stay fixed; the template's own `f_m_hz` is
/// ignored.
pub fn field_sweep_map(
    mag_range: &[MagnetConfig],
    template: &ResonatorParams,
    grid: &FrequencyGrid,
) -> Result<FieldSweepMap, ModelError> {
    if mag_range.is_empty() {
        return Err(ModelError::EmptyFieldRange);
    }
    let n_rows = mag_range.len();
    let mut map = FieldSweepMap {
        b_values_t: Vec::with_capacity(n_rows),
        f_m_hz: Vec::with_capacity(n_rows),
        grid: *grid,
        s21_db: Vec::with_capacity(n_rows),
        s12_db: Vec::with_capacity(n_rows),
        iso_db: Vec::with_capacity(n_rows),
    };
    for mag in mag_range {
        let f_m = magnon_frequency(mag)?;
        let params = ResonatorParams {
            f_m_hz: f_m,
            ..*template
        };
        let spec = s_matrix_single(&params, grid)?;
        map.b_values_t.push(mag.b_t);
        map.f_m_hz.push(f_m);
        map.s21_db
            .push(spec.s21.iter().map(|s| 20.0 * s.norm().log10()).collect());
        map.s12_db
            .push(spec.s12.iter().map(|s| 20.0 * s.norm().log10()).collect());
        map.iso_db.push(isolation_db(&spec));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MHZ: f64 = 1e6;

    fn grid_around(f_m: f64, half_span: f64, n: usize) -> FrequencyGrid {
        FrequencyGrid::new(f_m - half_span, f_m + half_span, n).unwrap()
    }

    /// Evaluates Eq-style S-parameters directly at one frequency, as an
    /// independent route for the frozen examples below.
    fn s_at(params: &ResonatorParams, f: f64) -> (Complex64, Complex64, Complex64) {
        let grid = FrequencyGrid::new(f - 1.0, f + 1.0, 3).unwrap();
        let spec = s_matrix_single(params, &grid).unwrap();
        (spec.s21[1], spec.s12[1], spec.s11[1])
    }

    #[test]
    fn critical_chiral_coupling_zeroes_transmission_at_resonance() {
        // kappa_R/2pi = 2*gamma_i/2pi = 2.4 MHz, kappa_L = 0: pronounced dip.
        let p = ResonatorParams::new(6e9, 1.2 * MHZ, 2.4 * MHZ, 0.0);
        let (s21, s12, s11) = s_at(&p, 6e9);
        assert!(s21.norm() < 1e-15, "S21 = {s21}");
        assert_eq!(s12, Complex64::new(1.0, 0.0));
        assert_eq!(s11, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decoupled_resonator_is_identity() {
        let p = ResonatorParams::new(6e9, 3.3 * MHZ, 0.0, 0.0);
        let grid = grid_around(6e9, 10.0 * MHZ, 101);
        let spec = s_matrix_single(&p, &grid).unwrap();
        for k in 0..grid.len() {
            assert_eq!(spec.s21[k], Complex64::new(1.0, 0.0));
            assert_eq!(spec.s12[k], Complex64::new(1.0, 0.0));
            assert_eq!(spec.s11[k], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn achiral_critical_point_splits_evenly() {
        // kappa_R = kappa_L = gamma_i at resonance: S21 = 1/2, S11 = -1/2.
        // Oracle: substitute into the closed form by hand,
        // S21 = 1 - k/(k + k) and S11 = -k/(2k).
        let k = 0.9 * MHZ;
        let p = ResonatorParams::new(4.2e9, k, k, k);
        let (s21, _, s11) = s_at(&p, 4.2e9);
        assert!((s21 - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s11 - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn perfect_chiral_subcritical_dip_depth() {
        // gamma_i/2pi = 1.2 MHz, kappa_R/2pi = 1.37 MHz, kappa_L = 0.
        // Analytic: S21(wm) = 1 - 1.37/(1.2 + 1.37/2), real.
        let p = ResonatorParams::new(6e9, 1.2 * MHZ, 1.37 * MHZ, 0.0);
        let (s21, s12, _) = s_at(&p, 6e9);
        let expected = 1.0 - 1.37 / (1.2 + 0.5 * 1.37);
        assert!((s21.re - expected).abs() < 1e-14);
        assert!(s21.im.abs() < 1e-14);
        assert_eq!(s12, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_non_finite_parameters_by_name() {
        let p = ResonatorParams::new(6e9, f64::NAN, 1.0, 1.0);
        let grid = grid_around(6e9, MHZ, 11);
        match s_matrix_single(&p, &grid) {
            Err(ModelError::InvalidParameter { field, .. }) => assert_eq!(field, "gamma_i_hz"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn absorption_perfect_chiral_critical() {
        let p = ResonatorParams::new(6e9, 1.2 * MHZ, 2.4 * MHZ, 0.0);
        let grid = grid_around(6e9, 8.0 * MHZ, 4001);
        let spec = s_matrix_single(&p, &grid).unwrap();
        let (a21, a12) = absorption(&spec);
        let mid = grid.nearest_index(6e9);
        assert!((a21[mid] - 1.0).abs() < 1e-9, "A21 = {}", a21[mid]);
        for &a in &a12 {
            assert!(a.abs() < 1e-12);
        }
    }

    #[test]
    fn absorption_achiral_ceiling_at_half() {
        let k = 1.2 * MHZ;
        let p = ResonatorParams::new(6e9, k, k, k);
        let spec = s_matrix_single(&p, &grid_around(6e9, 4.0 * MHZ, 3)).unwrap();
        let (a21, a12) = absorption(&spec);
        assert!((a21[1] - 0.5).abs() < 1e-12);
        assert!((a12[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn absorption_chiral_below_critical_is_eight_ninths() {
        // 1 - [(2g - k)/(2g + k)]^2 with k = g: 1 - (1/3)^2 = 8/9.
        let p = ResonatorParams::new(6e9, 1.2 * MHZ, 1.2 * MHZ, 0.0);
        let spec = s_matrix_single(&p, &grid_around(6e9, 4.0 * MHZ, 3)).unwrap();
        let (a21, _) = absorption(&spec);
        assert!((a21[1] - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn absorption_checked_catches_broken_spectra() {
        let grid = FrequencyGrid::new(1e9, 2e9, 2).unwrap();
        let two = vec![Complex64::new(2.0, 0.0); 2];
        let zero = vec![Complex64::new(0.0, 0.0); 2];
        let spec = TwoPortSpectrum::new(grid, zero.clone(), two, zero.clone(), zero).unwrap();
        assert!(matches!(
            absorption_checked(&spec),
            Err(ModelError::PassivityViolation { .. })
        ));
    }

    #[test]
    fn chirality_signs_and_undefined_case() {
        let perfect = ResonatorParams::new(6e9, 1.2 * MHZ, 1.37 * MHZ, 0.0);
        assert_eq!(chirality(&perfect).unwrap(), 1.0);

        let achiral = ResonatorParams::new(6e9, 1.2 * MHZ, 0.7 * MHZ, 0.7 * MHZ);
        assert_eq!(chirality(&achiral).unwrap(), 0.0);

        let reversed = ResonatorParams::new(6e9, 1.2 * MHZ, 1.0, 3.0);
        assert_eq!(chirality(&reversed).unwrap(), -0.5);

        let mirror = ResonatorParams::new(6e9, 1.2 * MHZ, 0.0, 0.8 * MHZ);
        assert_eq!(chirality(&mirror).unwrap(), -1.0);

        let dead = ResonatorParams::new(6e9, 1.2 * MHZ, 0.0, 0.0);
        assert_eq!(chirality(&dead), Err(ModelError::UndefinedChirality));
    }

    #[test]
    fn isolation_reciprocal_and_suppressed() {
        let k = 0.8 * MHZ;
        let achiral = ResonatorParams::new(6e9, 1.2 * MHZ, k, k);
        let grid = grid_around(6e9, 5.0 * MHZ, 51);
        let iso = isolation_db(&s_matrix_single(&achiral, &grid).unwrap());
        for v in iso {
            assert!(v.abs() < 1e-12);
        }

        // ISO at resonance for the perfect-chiral fit point:
        // 20*log10(1 - 1.37/1.885) = -11.27 dB.
        let chiral = ResonatorParams::new(6e9, 1.2 * MHZ, 1.37 * MHZ, 0.0);
        let spec = s_matrix_single(&chiral, &grid_around(6e9, 4.0 * MHZ, 3)).unwrap();
        let iso = isolation_db(&spec);
        let expected = 20.0 * (1.0 - 1.37 / 1.885_f64).log10();
        assert!((iso[1] - expected).abs() < 1e-12);
        assert!((iso[1] - -11.27).abs() < 5e-3, "ISO = {}", iso[1]);
    }

    #[test]
    fn isolation_far_detuned_tends_to_zero() {
        let p = ResonatorParams::new(6e9, 1.2 * MHZ, 1.37 * MHZ, 0.0);
        let grid = FrequencyGrid::new(1e9, 2e9, 2).unwrap();
        let iso = isolation_db(&s_matrix_single(&p, &grid).unwrap());
        for v in iso {
            assert!(v.abs() < 1e-4, "far-detuned ISO = {v}");
        }
    }

    #[test]
    fn isolation_never_crashes_on_zero_transmission() {
        let grid = FrequencyGrid::new(1e9, 2e9, 2).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 2];
        let one = vec![Complex64::new(1.0, 0.0); 2];
        let spec = TwoPortSpectrum::new(grid, zero.clone(), one, zero.clone(), zero).unwrap();
        let iso = isolation_db(&spec);
        assert!(iso.iter().all(|v| *v == f64::INFINITY));

        let spec2 = TwoPortSpectrum::new(
            grid,
            vec![Complex64::new(0.0, 0.0); 2],
            vec![Complex64::new(0.0, 0.0); 2],
            vec![Complex64::new(0.0, 0.0); 2],
            vec![Complex64::new(0.0, 0.0); 2],
        )
        .unwrap();
        assert!(isolation_db(&spec2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn magnon_frequency_examples() {
        let zero = MagnetConfig {
            b_t: 0.0,
            b_a_t: 0.0,
            ..Default::default()
        };
        assert_eq!(magnon_frequency(&zero).unwrap(), 0.0);

        // B = 1167 Gs = 0.1167 T at 28 GHz/T.
        let fig2 = MagnetConfig {
            b_t: 0.1167,
            ..Default::default()
        };
        let f = magnon_frequency(&fig2).unwrap();
        assert!((f - 3.2676e9).abs() < 1.0, "f = {f}");

        // Inversion: 6 GHz needs B = 0.2143 T.
        let b = required_field(6e9, &MagnetConfig::default()).unwrap();
        assert!((b - 0.214285714285714).abs() < 1e-12);

        let bad = MagnetConfig {
            b_t: -0.5,
            ..Default::default()
        };
        assert!(matches!(
            magnon_frequency(&bad),
            Err(ModelError::NegativeEffectiveField { .. })
        ));
    }

    #[test]
    fn criticality_report() {
        let p = ResonatorParams::new(6e9, 1.2 * MHZ, 2.4 * MHZ, 0.0);
        let r = critical_detuning_check(&p);
        assert_eq!(r.kappa_r_critical_hz, 2.4 * MHZ);
        assert!(r.is_critical);
        assert!(r.perfect_chiral);

        let under = ResonatorParams::new(6e9, 1.2 * MHZ, 1.2 * MHZ, 0.0);
        assert!(!critical_detuning_check(&under).is_critical);

        let leaky = ResonatorParams::new(6e9, 1.2 * MHZ, 2.4 * MHZ, 0.1 * MHZ);
        let r = critical_detuning_check(&leaky);
        assert!(r.is_critical);
        assert!(!r.perfect_chiral);
    }

    #[test]
    fn field_sweep_dip_moves_linearly_and_iso_flat_for_achiral() {
        let grid = FrequencyGrid::new(5.4e9, 6.6e9, 601).unwrap();
        let template = ResonatorParams::new(6e9, 1.2 * MHZ, 2.4 * MHZ, 0.0);
        let b0 = 0.214285714285714;
        let mags: Vec<MagnetConfig> = (0..21)
            .map(|i| MagnetConfig {
                b_t: b0 * (0.9 + 0.01 * i as f64),
                ..Default::default()
            })
            .collect();
        let map = field_sweep_map(&mags, &template, &grid).unwrap();

        // Dip locus follows f_m, which is linear in B.
        let mut last_dip = 0.0;
        for (row, f_m) in map.s21_db.iter().zip(&map.f_m_hz) {
            let (dip_idx, _) = row
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let dip_f = grid.sample(dip_idx);
            assert!((dip_f - f_m).abs() < 2.5 * MHZ, "dip at {dip_f}, f_m {f_m}");
            assert!(dip_f > last_dip);
            last_dip = dip_f;
        }
        // Perfect chirality: |S12| row flat at 0 dB.
        for row in &map.s12_db {
            for v in row {
                assert_eq!(*v, 0.0);
            }
        }

        // Achiral template: ISO identically 0 dB.
        let achiral = ResonatorParams::new(6e9, 1.2 * MHZ, 1.1 * MHZ, 1.1 * MHZ);
        let map = field_sweep_map(&mags, &achiral, &grid).unwrap();
        for row in &map.iso_db {
            for v in row {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn field_sweep_single_point_matches_single_resonator() {
        let grid = FrequencyGrid::new(5.99e9, 6.01e9, 201).unwrap();
        let template = ResonatorParams::new(1e9, 1.2 * MHZ, 2.4 * MHZ, 0.0);
        let mag = MagnetConfig {
            b_t: 6e9 / DEFAULT_GYRO_HZ_PER_T,
            ..Default::default()
        };
        let map = field_sweep_map(&[mag], &template, &grid).unwrap();
        let f_m = magnon_frequency(&mag).unwrap();
        let spec = s_matrix_single(
            &ResonatorParams {
                f_m_hz: f_m,
                ..template
            },
            &grid,
        )
        .unwrap();
        for (k, s) in spec.s21.iter().enumerate() {
            assert_eq!(map.s21_db[0][k], 20.0 * s.norm().log10());
        }
        assert!(matches!(
            field_sweep_map(&[], &template, &grid),
            Err(ModelError::EmptyFieldRange)
        ));
    }

    #[test]
    fn grid_sampling_is_exact_at_endpoints_and_monotonic() {
        let grid = FrequencyGrid::new(5.99e9, 6.01e9, 2001).unwrap();
        assert_eq!(grid.sample(0), 5.99e9);
        assert_eq!(grid.sample(2000), 6.01e9);
        let vals = grid.values();
        for w in vals.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert_eq!(grid.nearest_index(6.0e9), 1000);
    }
}
