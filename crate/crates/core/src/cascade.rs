//! Composition of two-port networks along a shared waveguide.
//!
//! Chains are built from resonator elements and propagation segments and
//! composed with the Redheffer star product, which stays well-defined where
//! transfer matrices blow up (a critically coupled chiral resonator has
//! S21 = 0 on resonance, so T-matrix composition would divide by zero there).

use num_complex::Complex64;
use thiserror::Error;

use crate::dispersion::{self, GrooveGeometry};
use crate::model::{s_matrix_single, FrequencyGrid, ModelError, ResonatorParams, TwoPortSpectrum};

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

/// Feedback denominators smaller than this indicate a resonant singularity
/// of the composite network rather than a representable response.
pub const STAR_SINGULARITY_EPS: f64 = 1e-14;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CascadeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot compose spectra on different grids")]
    GridMismatch,
    #[error("composite network singular at grid point {index} (f = {f_hz} Hz): |1 - S22a*S11b| = {denom_mag} < {STAR_SINGULARITY_EPS}")]
    Singular {
        index: usize,
        f_hz: f64,
        denom_mag: f64,
    },
    #[error("empty cascade: no elements to compose")]
    Empty,
    #[error("invalid propagation segment: {reason}")]
    InvalidSegment { reason: String },
}

/// How a propagation segment turns frequency into phase.
#[derive(Debug, Clone, PartialEq)]
pub enum PropagationModel {
    /// Constant effective index: beta = n_eff * 2*pi*f / c.
    LinearPhase { effective_index: f64 },
    /// Phase from the corrugated-waveguide dispersion relation.
    Sspp { geometry: GrooveGeometry },
}

/// One element of a cascade chain.
#[derive(Debug, Clone, PartialEq)]
pub enum CascadeElement {
    Resonator(ResonatorParams),
    /// Lossless delay line of the given physical length.
    Propagation {
        length_mm: f64,
        model: PropagationModel,
    },
}

/// Redheffer star product: `a` is the upstream network (closer to port 1),
/// `b` downstream. Frequency-pointwise; grids must be identical.
pub fn star(a: &TwoPortSpectrum, b: &TwoPortSpectrum) -> Result<TwoPortSpectrum, CascadeError> {
    if a.grid != b.grid {
        return Err(CascadeError::GridMismatch);
    }
    let n = a.len();
    let mut s11 = Vec::with_capacity(n);
    let mut s21 = Vec::with_capacity(n);
    let mut s12 = Vec::with_capacity(n);
    let mut s22 = Vec::with_capacity(n);
    for k in 0..n {
        let denom = Complex64::new(1.0, 0.0) - a.s22[k] * b.s11[k];
        if denom.norm() < STAR_SINGULARITY_EPS {
            return Err(CascadeError::Singular {
                index: k,
                f_hz: a.grid.sample(k),
                denom_mag: denom.norm(),
            });
        }
        let inv = denom.inv();
        s11.push(a.s11[k] + a.s12[k] * b.s11[k] * a.s21[k] * inv);
        s21.push(b.s21[k] * a.s21[k] * inv);
        s12.push(a.s12[k] * b.s12[k] * inv);
        s22.push(b.s22[k] + b.s21[k] * a.s22[k] * b.s12[k] * inv);
    }
    Ok(TwoPortSpectrum::new(a.grid, s11, s21, s12, s22)?)
}

/// Two-port of a lossless propagation segment: `S21 = S12 = exp(-i*beta*L)`,
/// no reflection.
pub fn propagation_spectrum(
    length_mm: f64,
    model: &PropagationModel,
    grid: &FrequencyGrid,
) -> Result<TwoPortSpectrum, CascadeError> {
    if !(length_mm.is_finite() && length_mm >= 0.0) {
        return Err(CascadeError::InvalidSegment {
            reason: format!("length_mm = {length_mm}, must be finite and >= 0"),
        });
    }
    let length_m = length_mm * 1e-3;
    let n = grid.len();
    let mut s21 = Vec::with_capacity(n);
    for f in grid.iter() {
        let beta = match model {
            PropagationModel::LinearPhase { effective_index } => {
                if !(effective_index.is_finite() && *effective_index > 0.0) {
                    return Err(CascadeError::InvalidSegment {
                        reason: format!(
                            "effective_index = {effective_index}, must be finite and > 0"
                        ),
                    });
                }
                effective_index * 2.0 * std::f64::consts::PI * f / C0
            }
            PropagationModel::Sspp { geometry } => {
                dispersion::beta(f, geometry).map_err(|e| CascadeError::InvalidSegment {
                    reason: e.to_string(),
                })?
            }
        };
        s21.push(Complex64::from_polar(1.0, -beta * length_m));
    }
    let zero = vec![Complex64::new(0.0, 0.0); n];
    Ok(TwoPortSpectrum::new(
        *grid,
        zero.clone(),
        s21.clone(),
        s21,
        zero,
    )?)
}

/// Spectrum of one element on `grid`.
pub fn element_spectrum(
    element: &CascadeElement,
    grid: &FrequencyGrid,
) -> Result<TwoPortSpectrum, CascadeError> {
    match element {
        CascadeElement::Resonator(params) => Ok(s_matrix_single(params, grid)?),
        CascadeElement::Propagation { length_mm, model } => {
            propagation_spectrum(*length_mm, model, grid)
        }
    }
}

/// Composes a chain of elements in the given order (first element closest to
/// port 1) by left-folding the star product.
pub fn cascade(
    chain: &[CascadeElement],
    grid: &FrequencyGrid,
) -> Result<TwoPortSpectrum, CascadeError> {
    let mut iter = chain.iter();
    let first = iter.next().ok_or(CascadeError::Empty)?;
    let mut acc = element_spectrum(first, grid)?;
    for element in iter {
        let next = element_spectrum(element, grid)?;
        acc = star(&acc, &next)?;
    }
    Ok(acc)
}

/// The same chain traversed from the other port: reverses element order and
/// swaps each element's ports. For reporting S-parameters "as seen from
/// port 2"; equals the transpose of the original network.
pub fn direction_swapped(chain: &[CascadeElement]) -> Vec<CascadeElement> {
    chain
        .iter()
        .rev()
        .map(|e| match e {
            CascadeElement::Resonator(p) => CascadeElement::Resonator(ResonatorParams {
                kappa_r_hz: p.kappa_l_hz,
                kappa_l_hz: p.kappa_r_hz,
                ..*p
            }),
            CascadeElement::Propagation { .. } => e.clone(),
        })
        .collect()
}
