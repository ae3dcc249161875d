//! Nonlinear least-squares extraction of resonator parameters from two-port
//! spectra: Levenberg-Marquardt with an analytic Jacobian, multiplicative
//! damping, projected nonnegativity bounds on rates, and a closed-form
//! dip-inversion initial guess. Coupling rates are optimized internally as
//! amplitudes `u = sqrt(kappa)` so the reflection model stays smooth at the
//! `kappa = 0` boundary; inputs, results, and standard errors are in rates.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{s_matrix_single, FrequencyGrid, ModelError, ResonatorParams, TwoPortSpectrum};

/// Default iteration cap; hitting it returns `converged = false`, not an error.
pub const MAX_ITER_DEFAULT: usize = 500;
/// Per-parameter relative step below which iteration stops.
pub const STEP_RTOL: f64 = 1e-10;
/// Scaled-gradient threshold for declaring convergence,
/// relative to `1 + residual_norm`.
pub const GRADIENT_RTOL: f64 = 1e-8;

const N_PARAMS: usize = 6;
const PARAM_NAMES: [&str; N_PARAMS] = [
    "f_m_hz",
    "gamma_i_hz",
    "kappa_r_hz",
    "kappa_l_hz",
    "bg_offset",
    "bg_slope",
];
const F_M: usize = 0;
const GAMMA: usize = 1;
const K_R: usize = 2;
const K_L: usize = 3;
const BG_OFF: usize = 4;
const BG_SLOPE: usize = 5;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("need at least {needed} data points for {n_free} free parameters, got {points}")]
    InsufficientData {
        points: usize,
        needed: usize,
        n_free: usize,
    },
    #[error("weights array has length {got}, data has {expected} points")]
    WeightLength { got: usize, expected: usize },
    #[error("weight at point {index} is {value}: must be finite and >= 0")]
    InvalidWeight { index: usize, value: f64 },
    #[error("invalid bounds for `{param}`: [{lo}, {hi}] ({reason})")]
    InvalidBounds {
        param: &'static str,
        lo: f64,
        hi: f64,
        reason: &'static str,
    },
    #[error("start value {value} for `{param}` is outside bounds [{lo}, {hi}]")]
    StartOutOfBounds {
        param: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("no residual components selected")]
    NoComponents,
    #[error("no free parameters")]
    NoFreeParams,
    #[error(
        "no resonance found: deepest dip is {depth_rel:.2e} of baseline, below the 1e-3 floor"
    )]
    NoResonance { depth_rel: f64 },
}

/// Which S-parameters contribute residuals. Default: both transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentMask {
    pub s11: bool,
    pub s21: bool,
    pub s12: bool,
    pub s22: bool,
}

impl Default for ComponentMask {
    fn default() -> Self {
        Self {
            s11: false,
            s21: true,
            s12: true,
            s22: false,
        }
    }
}

impl ComponentMask {
    pub fn any(&self) -> bool {
        self.s11 || self.s21 || self.s12 || self.s22
    }
}

/// Which parameters the fit may move. Default: the four resonator
/// parameters; the affine background stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeMask {
    pub f_m: bool,
    pub gamma_i: bool,
    pub kappa_r: bool,
    pub kappa_l: bool,
    pub bg_offset: bool,
    pub bg_slope: bool,
}

impl Default for FreeMask {
    fn default() -> Self {
        Self {
            f_m: true,
            gamma_i: true,
            kappa_r: true,
            kappa_l: true,
            bg_offset: false,
            bg_slope: false,
        }
    }
}

impl FreeMask {
    fn as_array(&self) -> [bool; N_PARAMS] {
        [
            self.f_m,
            self.gamma_i,
            self.kappa_r,
            self.kappa_l,
            self.bg_offset,
            self.bg_slope,
        ]
    }

    fn indices(&self) -> Vec<usize> {
        self.as_array()
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect()
    }
}

/// Multiplicative affine baseline `B(f) = offset + slope * u(f)`, where `u`
/// is the frequency normalized to [-1/2, 1/2] across the grid. Models a
/// transmission baseline that is not exactly 0 dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundModel {
    pub offset: f64,
    pub slope: f64,
}

impl Default for BackgroundModel {
    fn default() -> Self {
        Self {
            offset: 1.0,
            slope: 0.0,
        }
    }
}

/// Finite `[lo, hi]` box per parameter. Rates stay nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub f_m_hz: (f64, f64),
    pub gamma_i_hz: (f64, f64),
    pub kappa_r_hz: (f64, f64),
    pub kappa_l_hz: (f64, f64),
    pub bg_offset: (f64, f64),
    pub bg_slope: (f64, f64),
}

impl FitBounds {
    /// Defaults sized to the data: f_m within one span of the grid, rates in
    /// [0, 1 THz], background near unity.
    pub fn default_for(spectrum: &TwoPortSpectrum) -> Self {
        let lo = spectrum.grid.f_start_hz();
        let hi = spectrum.grid.f_stop_hz();
        let span = hi - lo;
        Self {
            f_m_hz: (lo - span, hi + span),
            gamma_i_hz: (0.0, 1e12),
            kappa_r_hz: (0.0, 1e12),
            kappa_l_hz: (0.0, 1e12),
            bg_offset: (0.0, 1e3),
            bg_slope: (-1e3, 1e3),
        }
    }

    fn as_array(&self) -> [(f64, f64); N_PARAMS] {
        [
            self.f_m_hz,
            self.gamma_i_hz,
            self.kappa_r_hz,
            self.kappa_l_hz,
            self.bg_offset,
            self.bg_slope,
        ]
    }
}

/// A fit setup over one measured (or synthetic) spectrum.
#[derive(Debug, Clone)]
pub struct FitProblem<'a> {
    pub data: &'a TwoPortSpectrum,
    /// True when the stored complex phases are trustworthy; residuals then
    /// compare real and imaginary parts. Otherwise only magnitudes count.
    pub phase_known: bool,
    pub components: ComponentMask,
    /// Per-point nonnegative weights (applied as sqrt(w) on each residual);
    /// uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub free: FreeMask,
    pub bounds: FitBounds,
    /// Start (and fixed value, when not freed) of the baseline terms.
    pub background: BackgroundModel,
    pub max_iter: usize,
}

impl<'a> FitProblem<'a> {
    pub fn new(data: &'a TwoPortSpectrum) -> Self {
        Self {
            data,
            phase_known: false,
            components: ComponentMask::default(),
            weights: None,
            free: FreeMask::default(),
            bounds: FitBounds::default_for(data),
            background: BackgroundModel::default(),
            max_iter: MAX_ITER_DEFAULT,
        }
    }

    fn validate(&self) -> Result<(), FitError> {
        if !self.components.any() {
            return Err(FitError::NoComponents);
        }
        let free_idx = self.free.indices();
        if free_idx.is_empty() {
            return Err(FitError::NoFreeParams);
        }
        let points = self.data.len();
        let needed = 4 * free_idx.len();
        if points < needed {
            return Err(FitError::InsufficientData {
                points,
                needed,
                n_free: free_idx.len(),
            });
        }
        if let Some(w) = &self.weights {
            if w.len() != points {
                return Err(FitError::WeightLength {
                    got: w.len(),
                    expected: points,
                });
            }
            for (index, &value) in w.iter().enumerate() {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(FitError::InvalidWeight { index, value });
                }
            }
        }
        for (i, (lo, hi)) in self.bounds.as_array().iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(FitError::InvalidBounds {
                    param: PARAM_NAMES[i],
                    lo: *lo,
                    hi: *hi,
                    reason: "bounds must be finite",
                });
            }
            if lo > hi {
                return Err(FitError::InvalidBounds {
                    param: PARAM_NAMES[i],
                    lo: *lo,
                    hi: *hi,
                    reason: "lo exceeds hi",
                });
            }
            // gamma_i, kappa_R, kappa_L are decay rates.
            if (i == GAMMA || i == K_R || i == K_L) && *lo < 0.0 {
                return Err(FitError::InvalidBounds {
                    param: PARAM_NAMES[i],
                    lo: *lo,
                    hi: *hi,
                    reason: "rates are bounded below by 0",
                });
            }
        }
        Ok(())
    }
}

/// Per-parameter 1-sigma standard errors; `None` for parameters that were
/// held fixed. Entries become infinite when the Jacobian is rank-deficient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamErrors {
    pub f_m_hz: Option<f64>,
    pub gamma_i_hz: Option<f64>,
    pub kappa_r_hz: Option<f64>,
    pub kappa_l_hz: Option<f64>,
    pub bg_offset: Option<f64>,
    pub bg_slope: Option<f64>,
}

impl ParamErrors {
    fn set(&mut self, idx: usize, value: f64) {
        match idx {
            F_M => self.f_m_hz = Some(value),
            GAMMA => self.gamma_i_hz = Some(value),
            K_R => self.kappa_r_hz = Some(value),
            K_L => self.kappa_l_hz = Some(value),
            BG_OFF => self.bg_offset = Some(value),
            _ => self.bg_slope = Some(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub resonator: ResonatorParams,
    pub background: BackgroundModel,
    pub stderr: ParamErrors,
    /// Weighted 2-norm of the final residual vector.
    pub residual_norm: f64,
    pub n_iter: usize,
    /// True iff the projected, Marquardt-scaled gradient (in the internal
    /// amplitude coordinates) satisfies
    /// `|grad| <= GRADIENT_RTOL * (1 + residual_norm)` at the final point.
    pub converged: bool,
    /// Warning: the Jacobian lost rank at the solution; standard errors are
    /// reported as infinite.
    pub rank_deficient: bool,
    /// Residual norm at the start and after every accepted step
    /// (non-increasing by construction).
    pub residual_history: Vec<f64>,
}

/// Internal optimization coordinates. The coupling rates are carried as
/// amplitudes `u = sqrt(kappa)`: the reflection term `sqrt(kR kL)` becomes
/// the plain product `uR uL`, so every model component is smooth in the
/// parameters all the way to the `kappa = 0` boundary (where the rate-space
/// square-root derivative would blow up).
fn pack(resonator: &ResonatorParams, background: &BackgroundModel) -> [f64; N_PARAMS] {
    [
        resonator.f_m_hz,
        resonator.gamma_i_hz,
        resonator.kappa_r_hz.sqrt(),
        resonator.kappa_l_hz.sqrt(),
        background.offset,
        background.slope,
    ]
}

fn unpack(
    theta: &[f64; N_PARAMS],
    template: &ResonatorParams,
) -> (ResonatorParams, BackgroundModel) {
    (
        ResonatorParams {
            f_m_hz: theta[F_M],
            gamma_i_hz: theta[GAMMA],
            kappa_r_hz: theta[K_R] * theta[K_R],
            kappa_l_hz: theta[K_L] * theta[K_L],
            ..*template
        },
        BackgroundModel {
            offset: theta[BG_OFF],
            slope: theta[BG_SLOPE],
        },
    )
}

/// Model value and parameter gradient of one S-component at one frequency.
struct ComponentEval {
    m: Complex64,
    /// dm/dtheta for the six internal parameters.
    dm: [Complex64; N_PARAMS],
}

/// Closed-form S-parameters and derivatives in /2pi units: the 2pi factors
/// cancel between numerator and denominator, so frequencies and rates enter
/// directly in Hz. `theta` is in internal coordinates (rates as amplitudes),
/// making every component and derivative polynomial in `uR`, `uL` over the
/// resonant denominator -- smooth even where a rate is exactly zero.
fn eval_components(
    theta: &[f64; N_PARAMS],
    f_hz: f64,
    u: f64,
    out: &mut [Option<ComponentEval>; 4],
    want: &[bool; 4],
) {
    let u_r = theta[K_R];
    let u_l = theta[K_L];
    let (k_r, k_l) = (u_r * u_r, u_l * u_l);
    let delta = f_hz - theta[F_M];
    let half = theta[GAMMA] + 0.5 * (k_r + k_l);
    let d = Complex64::new(delta, half);
    let inv = d.inv();
    let inv2 = inv * inv;
    let i = Complex64::i();
    let bg = theta[BG_OFF] + theta[BG_SLOPE] * u;

    let mut fill = |slot: usize, s: Complex64, ds: [Complex64; 4]| {
        let mut dm = [Complex64::new(0.0, 0.0); N_PARAMS];
        for (k, v) in ds.iter().enumerate() {
            dm[k] = bg * v;
        }
        dm[BG_OFF] = s;
        dm[BG_SLOPE] = u * s;
        out[slot] = Some(ComponentEval { m: bg * s, dm });
    };

    // Order: s11, s21, s12, s22. Derivative columns: f_m, gamma_i, uR, uL.
    if want[0] || want[3] {
        let s11 = -i * u_r * u_l * inv;
        let ds = [
            -i * u_r * u_l * inv2,
            -u_r * u_l * inv2,
            -i * u_l * inv - u_r * u_r * u_l * inv2,
            -i * u_r * inv - u_r * u_l * u_l * inv2,
        ];
        if want[0] {
            fill(0, s11, ds);
        }
        if want[3] {
            fill(3, s11, ds);
        }
    }
    if want[1] {
        let s21 = Complex64::new(1.0, 0.0) - i * k_r * inv;
        fill(
            1,
            s21,
            [
                -i * k_r * inv2,
                -k_r * inv2,
                -2.0 * i * u_r * inv - k_r * u_r * inv2,
                -k_r * u_l * inv2,
            ],
        );
    }
    if want[2] {
        let s12 = Complex64::new(1.0, 0.0) - i * k_l * inv;
        fill(
            2,
            s12,
            [
                -i * k_l * inv2,
                -k_l * inv2,
                -k_l * u_r * inv2,
                -2.0 * i * u_l * inv - k_l * u_l * inv2,
            ],
        );
    }
}

struct Residuals {
    r: Vec<f64>,
    /// Row-major m x n_free; empty when the Jacobian was not requested.
    jac: Vec<f64>,
}

fn assemble(
    problem: &FitProblem,
    theta: &[f64; N_PARAMS],
    free_idx: &[usize],
    with_jac: bool,
) -> Residuals {
    let grid = &problem.data.grid;
    let n_pts = grid.len();
    let want = [
        problem.components.s11,
        problem.components.s21,
        problem.components.s12,
        problem.components.s22,
    ];
    let data_arrays: [&[Complex64]; 4] = [
        &problem.data.s11,
        &problem.data.s21,
        &problem.data.s12,
        &problem.data.s22,
    ];
    let n_comp = want.iter().filter(|w| **w).count();
    let rows_per = if problem.phase_known { 2 } else { 1 };
    let m = n_pts * n_comp * rows_per;
    let n = free_idx.len();
    let mut res = Residuals {
        r: Vec::with_capacity(m),
        jac: if with_jac {
            Vec::with_capacity(m * n)
        } else {
            Vec::new()
        },
    };
    let f_mid = 0.5 * (grid.f_start_hz() + grid.f_stop_hz());
    let span = grid.f_stop_hz() - grid.f_start_hz();

    let mut evals: [Option<ComponentEval>; 4] = [None, None, None, None];
    for k in 0..n_pts {
        let f = grid.sample(k);
        let u = (f - f_mid) / span;
        let sw = problem.weights.as_ref().map_or(1.0, |w| w[k]).sqrt();
        eval_components(theta, f, u, &mut evals, &want);
        for (slot, data) in data_arrays.iter().enumerate() {
            if !want[slot] {
                continue;
            }
            let ev = evals[slot].take().unwrap();
            let d = data[k];
            if problem.phase_known {
                res.r.push(sw * (ev.m.re - d.re));
                res.r.push(sw * (ev.m.im - d.im));
                if with_jac {
                    for &j in free_idx {
                        res.jac.push(sw * ev.dm[j].re);
                    }
                    for &j in free_idx {
                        res.jac.push(sw * ev.dm[j].im);
                    }
                }
            } else {
                let mag = ev.m.norm();
                res.r.push(sw * (mag - d.norm()));
                if with_jac {
                    for &j in free_idx {
                        // d|m|/dtheta; a vanishing magnitude has no defined
                        // phase direction, so its slope is taken as zero.
                        let g = if mag == 0.0 {
                            0.0
                        } else {
                            (ev.m.conj() * ev.dm[j]).re / mag
                        };
                        res.jac.push(sw * g);
                    }
                }
            }
        }
    }
    res
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cholesky solve of the SPD system `a x = b` (row-major n x n, in place).
/// Returns false when a pivot is not strictly positive.
fn cholesky_solve(n: usize, a: &mut [f64], b: &mut [f64]) -> bool {
    // Factor a = L L^T, storing L in the lower triangle.
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return false;
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    // Forward then backward substitution.
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

/// Least-squares solve of the damped, column-scaled step system
/// `min |J_s d + r|^2 + lambda |d|^2` by Householder QR of the augmented
/// matrix `[J_s; sqrt(lambda) I]`. Working on the rectangular factor keeps
/// the step direction accurate where squaring into normal equations would
/// spend half the floating-point digits on the condition number.
fn damped_qr_step(
    m: usize,
    n: usize,
    jac_scaled: &[f64],
    r: &[f64],
    lambda: f64,
) -> Option<Vec<f64>> {
    let rows = m + n;
    let mut a = vec![0.0; rows * n];
    a[..m * n].copy_from_slice(jac_scaled);
    let root = lambda.sqrt();
    for j in 0..n {
        a[(m + j) * n + j] = root;
    }
    let mut b = vec![0.0; rows];
    for (bi, &ri) in b.iter_mut().zip(r.iter()) {
        *bi = -ri;
    }
    for j in 0..n {
        let mut norm2 = 0.0;
        for i in j..rows {
            norm2 += a[i * n + j] * a[i * n + j];
        }
        if norm2 <= 0.0 || norm2.is_nan() {
            return None;
        }
        let norm = norm2.sqrt();
        let ajj = a[j * n + j];
        let alpha = if ajj >= 0.0 { -norm } else { norm };
        let head = ajj - alpha;
        // |v|^2 / 2 for the reflector v = x - alpha e_j; positive by the
        // sign choice above, which also avoids cancellation in `head`.
        let denom = -alpha * head;
        if denom <= 0.0 || denom.is_nan() {
            return None;
        }
        a[j * n + j] = head;
        for k in (j + 1)..n {
            let mut s = 0.0;
            for i in j..rows {
                s += a[i * n + j] * a[i * n + k];
            }
            s /= denom;
            for i in j..rows {
                a[i * n + k] -= s * a[i * n + j];
            }
        }
        let mut s = 0.0;
        for i in j..rows {
            s += a[i * n + j] * b[i];
        }
        s /= denom;
        for i in j..rows {
            b[i] -= s * a[i * n + j];
        }
        a[j * n + j] = alpha;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[i * n + k] * x[k];
        }
        let d = a[i * n + i];
        if d == 0.0 {
            return None;
        }
        x[i] = s / d;
    }
    Some(x)
}

/// Inverse of an SPD matrix via Cholesky; None when singular.
fn spd_inverse(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut a_copy = a.to_vec();
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        if !cholesky_solve(n, &mut a_copy, &mut e) {
            return None;
        }
        for row in 0..n {
            inv[row * n + col] = e[row];
        }
    }
    Some(inv)
}

/// Normal-equation pieces with Marquardt diagonal scaling applied. Steps are
/// solved from the rectangular factor (`damped_qr_step`); this struct serves
/// the gradient criterion, the column scales, and the covariance.
struct NormalEq {
    /// Scaled gradient Jt r / d_i.
    g_hat: Vec<f64>,
    /// Column scales d_i = sqrt((JtJ)_ii), 1 for dead columns.
    scale: Vec<f64>,
    /// Raw JtJ.
    a: Vec<f64>,
    /// True when some diagonal entry of JtJ vanished.
    dead_column: bool,
}

fn normal_equations(m: usize, n: usize, jac: &[f64], r: &[f64]) -> NormalEq {
    let mut a = vec![0.0; n * n];
    let mut g = vec![0.0; n];
    for row in 0..m {
        let jr = &jac[row * n..(row + 1) * n];
        for i in 0..n {
            g[i] += jr[i] * r[row];
            for j in i..n {
                a[i * n + j] += jr[i] * jr[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
    let mut dead = false;
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = a[i * n + i];
            if d > 0.0 {
                d.sqrt()
            } else {
                dead = true;
                1.0
            }
        })
        .collect();
    let g_hat = (0..n).map(|i| g[i] / scale[i]).collect();
    NormalEq {
        g_hat,
        scale,
        a,
        dead_column: dead,
    }
}

/// Scaled gradient with components that push against an active bound zeroed
/// out; this is the quantity the convergence flag is based on.
fn projected_gradient_norm(
    eq: &NormalEq,
    theta: &[f64; N_PARAMS],
    free_idx: &[usize],
    bounds: &[(f64, f64); N_PARAMS],
) -> f64 {
    let mut sum = 0.0;
    for (slot, &j) in free_idx.iter().enumerate() {
        let g = eq.g_hat[slot];
        let (lo, hi) = bounds[j];
        // Descent moves along -g: blocked downward at lo, upward at hi.
        let blocked = (theta[j] <= lo && g > 0.0) || (theta[j] >= hi && g < 0.0);
        if !blocked {
            sum += g * g;
        }
    }
    sum.sqrt()
}

/// Evaluates the fitted model -- the resonator response scaled by the
/// affine baseline -- on a grid, e.g. to overlay a fit over measured data.
pub fn model_spectrum(
    resonator: &ResonatorParams,
    background: &BackgroundModel,
    grid: &FrequencyGrid,
) -> Result<TwoPortSpectrum, ModelError> {
    let mut spec = s_matrix_single(resonator, grid)?;
    let f_mid = 0.5 * (grid.f_start_hz() + grid.f_stop_hz());
    let span = grid.f_stop_hz() - grid.f_start_hz();
    for k in 0..grid.len() {
        let u = (grid.sample(k) - f_mid) / span;
        let bg = background.offset + background.slope * u;
        spec.s11[k] *= bg;
        spec.s21[k] *= bg;
        spec.s12[k] *= bg;
        spec.s22[k] *= bg;
    }
    Ok(spec)
}

/// Weighted residual 2-norm at the given resonator parameters (background
/// taken from the problem). Zero iff the model reproduces the data exactly
/// at every positively weighted point.
pub fn residual_norm(problem: &FitProblem, params: &ResonatorParams) -> Result<f64, FitError> {
    problem.validate()?;
    params.validate()?;
    let theta = pack(params, &problem.background);
    let res = assemble(problem, &theta, &[], false);
    Ok(norm(&res.r))
}

/// Damped least squares from `start`, honoring bounds by projection.
///
/// Deterministic: identical inputs take identical steps. An exhausted
/// iteration cap returns a result with `converged = false` rather than an
/// error; a rank-deficient Jacobian sets the warning flag and infinite
/// standard errors.
pub fn fit_resonator(problem: &FitProblem, start: &ResonatorParams) -> Result<FitResult, FitError> {
    problem.validate()?;
    start.validate()?;
    let free_idx = problem.free.indices();
    let free_mask = problem.free.as_array();

    // Report bound violations in natural units before moving to internal
    // coordinates (rates as amplitudes, see `pack`).
    let natural = [
        start.f_m_hz,
        start.gamma_i_hz,
        start.kappa_r_hz,
        start.kappa_l_hz,
        problem.background.offset,
        problem.background.slope,
    ];
    for i in 0..N_PARAMS {
        if free_mask[i] {
            let (lo, hi) = problem.bounds.as_array()[i];
            if natural[i] < lo || natural[i] > hi {
                return Err(FitError::StartOutOfBounds {
                    param: PARAM_NAMES[i],
                    value: natural[i],
                    lo,
                    hi,
                });
            }
        }
    }
    let mut bounds = problem.bounds.as_array();
    for j in [K_R, K_L] {
        bounds[j] = (bounds[j].0.sqrt(), bounds[j].1.sqrt());
    }
    let mut theta = pack(start, &problem.background);

    let n = free_idx.len();
    let mut lambda = 1e-3;
    let mut res = assemble(problem, &theta, &free_idx, true);
    let mut r_norm = norm(&res.r);
    let mut history = vec![r_norm];
    let mut n_iter = 0;
    let mut converged = false;
    let mut last_eq = None;

    while n_iter < problem.max_iter {
        n_iter += 1;
        let m = res.r.len();
        let eq = normal_equations(m, n, &res.jac, &res.r);
        let pg = projected_gradient_norm(&eq, &theta, &free_idx, &bounds);
        if pg <= GRADIENT_RTOL * (1.0 + r_norm) {
            converged = true;
            last_eq = Some(eq);
            break;
        }

        // The damped step solves in Marquardt-scaled coordinates; scale the
        // Jacobian columns once per linearization.
        let mut jac_scaled = res.jac.clone();
        for row in 0..m {
            for slot in 0..n {
                jac_scaled[row * n + slot] /= eq.scale[slot];
            }
        }

        // Inner damping loop: escalate lambda until a step shrinks the
        // residual or the step collapses below resolution.
        let mut stalled = false;
        loop {
            let step_hat = match damped_qr_step(m, n, &jac_scaled, &res.r, lambda) {
                Some(step) => step,
                None => {
                    // Should not happen for lambda > 0; escalate regardless.
                    lambda *= 10.0;
                    if lambda > 1e15 {
                        stalled = true;
                        break;
                    }
                    continue;
                }
            };
            let mut candidate = theta;
            let mut tiny = true;
            for (slot, &j) in free_idx.iter().enumerate() {
                let delta = step_hat[slot] / eq.scale[slot];
                let (lo, hi) = bounds[j];
                candidate[j] = (theta[j] + delta).clamp(lo, hi);
                if (candidate[j] - theta[j]).abs() > STEP_RTOL * (1.0 + theta[j].abs()) {
                    tiny = false;
                }
            }
            if tiny {
                stalled = true;
                break;
            }
            let cand_res = assemble(problem, &candidate, &free_idx, true);
            let cand_norm = norm(&cand_res.r);
            if cand_norm < r_norm {
                theta = candidate;
                res = cand_res;
                r_norm = cand_norm;
                history.push(r_norm);
                lambda = (lambda * 0.1).max(1e-15);
                break;
            }
            lambda *= 10.0;
            if lambda > 1e15 {
                stalled = true;
                break;
            }
        }
        if stalled {
            // No representable step improves the fit; report convergence by
            // the gradient criterion at the final point.
            let eq = normal_equations(res.r.len(), n, &res.jac, &res.r);
            let pg = projected_gradient_norm(&eq, &theta, &free_idx, &bounds);
            converged = pg <= GRADIENT_RTOL * (1.0 + r_norm);
            last_eq = Some(eq);
            break;
        }
    }

    let eq = last_eq.unwrap_or_else(|| normal_equations(res.r.len(), n, &res.jac, &res.r));

    // Covariance from the unscaled normal matrix; sigma^2 = |r|^2 / (m - n).
    let m = res.r.len();
    let dof = m.saturating_sub(n).max(1);
    let sigma2 = r_norm * r_norm / dof as f64;
    let mut stderr = ParamErrors::default();
    let mut rank_deficient = eq.dead_column;
    match spd_inverse(n, &eq.a) {
        Some(cov) => {
            for (slot, &j) in free_idx.iter().enumerate() {
                let sigma_internal = (sigma2 * cov[slot * n + slot]).max(0.0).sqrt();
                // Delta method back to rate units: kappa = u^2.
                let sigma = if j == K_R || j == K_L {
                    2.0 * theta[j] * sigma_internal
                } else {
                    sigma_internal
                };
                stderr.set(j, sigma);
            }
        }
        None => {
            rank_deficient = true;
            for &j in &free_idx {
                stderr.set(j, f64::INFINITY);
            }
        }
    }

    let (resonator, background) = unpack(&theta, start);
    Ok(FitResult {
        resonator,
        background,
        stderr,
        residual_norm: r_norm,
        n_iter,
        converged,
        rank_deficient,
        residual_history: history,
    })
}

/// Closed-form starting point from dip geometry.
///
/// The resonance sits at the minimum of `min(|S21|, |S12|)`; the total
/// half-linewidth `H = gamma_i + (kappa_R + kappa_L)/2` comes from the full
/// width of the deeper dip at half depth, and the two dip floors `d21`,
/// `d12` are inverted on the undercoupled branch:
///
/// ```text
/// H = (W/2) * sqrt((3 + d) / (1 + 3d))
/// kappa_R = H * (1 - d21),  kappa_L = H * (1 - d12),
/// gamma_i = H * (d21 + d12) / 2
/// ```
pub fn initial_guess(data: &TwoPortSpectrum) -> Result<ResonatorParams, FitError> {
    let grid = &data.grid;
    let n = grid.len();
    let mag21: Vec<f64> = data.s21.iter().map(|s| s.norm()).collect();
    let mag12: Vec<f64> = data.s12.iter().map(|s| s.norm()).collect();

    // Baselines from the spectrum edges.
    let baseline = |m: &[f64]| 0.5 * (m[0] + m[n - 1]);
    let b21 = baseline(&mag21);
    let b12 = baseline(&mag12);

    let (k_star, _) = (0..n)
        .map(|k| (k, mag21[k].min(mag12[k])))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let f_m = grid.sample(k_star);

    let floor = |m: &[f64], b: f64| {
        if b <= 0.0 {
            1.0
        } else {
            (m[k_star] / b).clamp(0.0, 1.0)
        }
    };
    let d21 = floor(&mag21, b21);
    let d12 = floor(&mag12, b12);
    let depth_rel = (1.0 - d21).max(1.0 - d12);
    if depth_rel < 1e-3 {
        return Err(FitError::NoResonance { depth_rel });
    }

    // Width of the deeper dip at half depth.
    let (mags, b, d) = if 1.0 - d21 >= 1.0 - d12 {
        (&mag21, b21, d21)
    } else {
        (&mag12, b12, d12)
    };
    let half_level = b * 0.5 * (1.0 + d);
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k_star;
        for k in range {
            if mags[k] >= half_level {
                // Linear interpolation between the bracketing samples.
                let f0 = grid.sample(prev);
                let f1 = grid.sample(k);
                let m0 = mags[prev];
                let m1 = mags[k];
                let t = if m1 == m0 {
                    0.0
                } else {
                    (half_level - m0) / (m1 - m0)
                };
                return Some(f0 + t * (f1 - f0));
            }
            prev = k;
        }
        None
    };
    let right = cross(&mut ((k_star + 1)..n));
    let left = cross(&mut (0..k_star).rev());
    let half_width = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => f_m - l,
        (None, Some(r)) => r - f_m,
        // Dip wider than the scan: fall back to a fraction of the span.
        (None, None) => 0.125 * (grid.f_stop_hz() - grid.f_start_hz()),
    };
    let h = half_width * ((3.0 + d) / (1.0 + 3.0 * d)).sqrt();

    let kappa_r = (h * (1.0 - d21)).max(0.0);
    let kappa_l = (h * (1.0 - d12)).max(0.0);
    let gamma_i = (h * 0.5 * (d21 + d12)).max(0.0);
    Ok(ResonatorParams::new(f_m, gamma_i, kappa_r, kappa_l))
}
